#include "todsec/route.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "todsec/geo.hpp"

namespace todsec {

RoutePlan parse_route_json(const std::string& text, double match_radius_m) {
    RoutePlan plan;
    try {
        nlohmann::json doc = nlohmann::json::parse(text);
        plan.mission = doc.value("mission", std::string{});
        if (doc.contains("stops")) {
            for (const auto& s : doc["stops"]) plan.stops.push_back(s.get<std::string>());
        }
        for (const auto& item : doc.at("intersections")) {
            RouteIntersection x;
            x.geo.lat = item.at("lat").get<double>();
            x.geo.lon = item.at("lon").get<double>();
            if (!geo_in_range(x.geo)) {
                throw std::runtime_error("route intersection geocode out of range");
            }
            x.maneuver = maneuver_from_string(item.at("maneuver").get<std::string>());
            x.eta_s = item.at("eta_s").get<double>();
            x.eta_window_s = item.value("eta_window_s", 300.0);
            if (!(x.eta_window_s > 0.0)) {
                throw std::runtime_error("eta_window_s must be > 0");
            }
            plan.intersections.push_back(x);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed route document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("malformed route document: ") + e.what());
    }
    std::stable_sort(plan.intersections.begin(), plan.intersections.end(),
                     [](const RouteIntersection& a, const RouteIntersection& b) {
                         return a.eta_s < b.eta_s;
                     });
    for (std::size_t i = 0; i < plan.intersections.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.intersections.size(); ++j) {
            const double d = haversine_m(plan.intersections[i].geo, plan.intersections[j].geo);
            if (d <= match_radius_m) {
                throw std::runtime_error(
                    "duplicate intersection: entries " + std::to_string(i) + " and " +
                    std::to_string(j) + " are " + std::to_string(d) +
                    " m apart (match radius " + std::to_string(match_radius_m) + " m)");
            }
        }
    }
    return plan;
}

RoutePlan parse_route(const std::filesystem::path& path, double match_radius_m) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open route file: " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_route_json(text, match_radius_m);
}

void write_route(const RoutePlan& route, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["mission"] = route.mission;
    doc["stops"] = route.stops;
    doc["intersections"] = nlohmann::json::array();
    for (const auto& x : route.intersections) {
        nlohmann::json item;
        item["lat"] = x.geo.lat;
        item["lon"] = x.geo.lon;
        item["maneuver"] = to_string(x.maneuver);
        item["eta_s"] = x.eta_s;
        item["eta_window_s"] = x.eta_window_s;
        doc["intersections"].push_back(item);
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write route file: " + path.string());
    }
    out << doc.dump(2) << '\n';
}

}  // namespace todsec
