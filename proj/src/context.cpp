#include "todsec/context.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "todsec/geo.hpp"

namespace todsec {

namespace {

double entry_window(const ExpectationEntry& e, double default_window_s) {
    return e.window_s > 0.0 ? e.window_s : default_window_s;
}

AnomalyVerdict off_route_verdict(const ObservedEvent& ev, VerdictKind kind, double radius_m) {
    AnomalyVerdict v = make_verdict(kind, ev.geo, std::nullopt, false, false,
                                    "off-route event: no intersection within " +
                                        std::to_string(radius_m) + " m");
    v.time_s = ev.time_s;
    v.observed = ev.maneuver;
    return v;
}

bool event_shielded(const ObservedEvent& ev) {
    const bool alert_active = ev.alert.has_value() && ev.alert->active;
    return alert_active || ev.health != VehicleHealth::OK;
}

}  // namespace

ExpectationStore build_expectation_store(const RoutePlan& route, double match_radius_m) {
    if (!(match_radius_m > 0.0)) throw std::invalid_argument("match radius must be positive");

    ExpectationStore store;
    store.match_radius_m = match_radius_m;
    store.entries.reserve(route.intersections.size());
    for (const RouteIntersection& ri : route.intersections) {
        if (!(ri.eta_window_s > 0.0)) {
            throw std::runtime_error("intersection with non-positive time window in route '" +
                                     route.mission + "'");
        }
        store.entries.push_back({ri.geo, ri.maneuver, ri.eta_s, ri.eta_window_s});
    }
    std::stable_sort(store.entries.begin(), store.entries.end(),
                     [](const ExpectationEntry& a, const ExpectationEntry& b) {
                         return a.expected_time_s < b.expected_time_s;
                     });

    for (std::size_t i = 0; i < store.entries.size(); ++i) {
        for (std::size_t j = i + 1; j < store.entries.size(); ++j) {
            const double d = haversine_m(store.entries[i].geo, store.entries[j].geo);
            if (d <= match_radius_m) {
                throw std::runtime_error("intersections " + std::to_string(i) + " and " +
                                         std::to_string(j) + " are " + std::to_string(d) +
                                         " m apart, within the " + std::to_string(match_radius_m) +
                                         " m match radius");
            }
        }
    }
    return store;
}

std::optional<std::size_t> match_intersection(const GeoPoint& geo, const ExpectationStore& store) {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t i = 0; i < store.entries.size(); ++i) {
        const double d = haversine_m(geo, store.entries[i].geo);
        if (d <= store.match_radius_m && (!best || d < best_d)) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

std::vector<AnomalyVerdict> detect_incorrect_maneuver(const std::vector<ObservedEvent>& events,
                                                      const ExpectationStore& store) {
    std::vector<AnomalyVerdict> verdicts;
    verdicts.reserve(events.size());
    for (const ObservedEvent& ev : events) {
        const auto idx = match_intersection(ev.geo, store);
        if (!idx) {
            verdicts.push_back(off_route_verdict(ev, VerdictKind::ContextMismatch,
                                                 store.match_radius_m));
            continue;
        }
        const ExpectationEntry& entry = store.entries[*idx];
        const bool wrong = ev.maneuver != entry.maneuver;
        AnomalyVerdict v = make_verdict(
            VerdictKind::ContextMismatch, entry.geo, std::nullopt, wrong, false,
            wrong ? "observed " + to_string(ev.maneuver) + " where " + to_string(entry.maneuver) +
                        " was planned"
                  : "maneuver matches plan");
        v.time_s = ev.time_s;
        v.expected = entry.maneuver;
        v.observed = ev.maneuver;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::vector<AnomalyVerdict> detect_incorrect_time(const std::vector<ObservedEvent>& events,
                                                  const ExpectationStore& store,
                                                  double default_window_s) {
    std::vector<AnomalyVerdict> verdicts;
    verdicts.reserve(events.size());
    for (const ObservedEvent& ev : events) {
        const auto idx = match_intersection(ev.geo, store);
        if (!idx) {
            verdicts.push_back(off_route_verdict(ev, VerdictKind::ContextTimeWindow,
                                                 store.match_radius_m));
            continue;
        }
        const ExpectationEntry& entry = store.entries[*idx];
        const double window = entry_window(entry, default_window_s);
        const double skew = std::abs(ev.time_s - entry.expected_time_s);
        const bool late = skew > window;  // strictly outside the window
        AnomalyVerdict v = make_verdict(
            VerdictKind::ContextTimeWindow, entry.geo, std::nullopt, late, false,
            late ? "event " + std::to_string(skew) + " s from plan, window " +
                       std::to_string(window) + " s"
                 : "within time window");
        v.time_s = ev.time_s;
        v.expected = entry.maneuver;
        v.observed = ev.maneuver;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::vector<AnomalyVerdict> detect_with_alert_filter(const std::vector<ObservedEvent>& events,
                                                     const ExpectationStore& store,
                                                     double default_window_s) {
    std::vector<AnomalyVerdict> verdicts;
    verdicts.reserve(events.size());
    for (const ObservedEvent& ev : events) {
        const auto idx = match_intersection(ev.geo, store);
        if (!idx) {
            verdicts.push_back(off_route_verdict(ev, VerdictKind::ContextMismatch,
                                                 store.match_radius_m));
            continue;
        }
        const ExpectationEntry& entry = store.entries[*idx];
        const bool wrong_maneuver = ev.maneuver != entry.maneuver;
        const double window = entry_window(entry, default_window_s);
        const bool wrong_time = std::abs(ev.time_s - entry.expected_time_s) > window;
        const bool mismatch = wrong_maneuver || wrong_time;
        const bool shielded = mismatch && event_shielded(ev);

        std::string detail;
        if (!mismatch) {
            detail = "matches plan";
        } else {
            detail = wrong_maneuver ? "maneuver mismatch" : "time-window mismatch";
            if (shielded) {
                detail += ev.alert && ev.alert->active
                              ? " explained by active alert '" + ev.alert->kind + "'"
                              : " explained by vehicle health " + to_string(ev.health);
            }
        }
        AnomalyVerdict v = make_verdict(
            wrong_maneuver ? VerdictKind::ContextMismatch : VerdictKind::ContextTimeWindow,
            entry.geo, std::nullopt, mismatch && !shielded, shielded, std::move(detail));
        v.time_s = ev.time_s;
        v.expected = entry.maneuver;
        v.observed = ev.maneuver;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::vector<ObservedEvent> parse_drive_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open drive log '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed drive log '" + path.string() + "': " + e.what());
    }

    std::vector<ObservedEvent> events;
    for (const auto& j : doc.at("events")) {
        ObservedEvent ev;
        ev.geo.lat = j.at("lat").get<double>();
        ev.geo.lon = j.at("lon").get<double>();
        if (!geo_in_range(ev.geo)) {
            throw std::runtime_error("drive log event out of geographic range");
        }
        ev.maneuver = maneuver_from_string(j.at("maneuver").get<std::string>());
        ev.time_s = j.at("time_s").get<double>();
        if (j.contains("health") && !j["health"].is_null()) {
            ev.health = health_from_string(j["health"].get<std::string>());
        }
        if (j.contains("alert") && !j["alert"].is_null()) {
            const auto& a = j["alert"];
            DynamicAlert alert;
            alert.kind = a.at("kind").get<std::string>();
            alert.active = a.at("active").get<bool>();
            alert.location.lat = a.value("lat", ev.geo.lat);
            alert.location.lon = a.value("lon", ev.geo.lon);
            ev.alert = alert;
        }
        events.push_back(std::move(ev));
    }
    return events;
}

void write_drive_log(const std::vector<ObservedEvent>& events,
                     const std::filesystem::path& path) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const ObservedEvent& ev : events) {
        nlohmann::ordered_json j{{"lat", ev.geo.lat},
                                 {"lon", ev.geo.lon},
                                 {"maneuver", to_string(ev.maneuver)},
                                 {"time_s", ev.time_s},
                                 {"health", to_string(ev.health)}};
        if (ev.alert) {
            j["alert"] = {{"kind", ev.alert->kind},
                          {"active", ev.alert->active},
                          {"lat", ev.alert->location.lat},
                          {"lon", ev.alert->location.lon}};
        } else {
            j["alert"] = nullptr;
        }
        arr.push_back(std::move(j));
    }
    nlohmann::ordered_json doc{{"events", std::move(arr)}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << "\n";
}

void write_verdicts_jsonl(const std::vector<AnomalyVerdict>& verdicts,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (const AnomalyVerdict& v : verdicts) {
        nlohmann::ordered_json j;
        j["kind"] = to_string(v.kind);
        j["lat"] = v.location ? nlohmann::json(v.location->lat) : nlohmann::json(nullptr);
        j["lon"] = v.location ? nlohmann::json(v.location->lon) : nlohmann::json(nullptr);
        j["time_s"] = v.time_s ? nlohmann::json(*v.time_s) : nlohmann::json(nullptr);
        j["expected"] = v.expected ? nlohmann::json(to_string(*v.expected)) : nlohmann::json(nullptr);
        j["observed"] = v.observed ? nlohmann::json(to_string(*v.observed)) : nlohmann::json(nullptr);
        j["flagged"] = v.flagged;
        j["suppressed_by_alert"] = v.suppressed_by_alert;
        if (v.trace_id) j["trace_id"] = *v.trace_id;
        if (!v.detail.empty()) j["detail"] = v.detail;
        out << j.dump() << "\n";
    }
}

std::vector<AnomalyVerdict> parse_verdicts_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<AnomalyVerdict> verdicts;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("malformed verdict at line " + std::to_string(row) + ": " +
                                     e.what());
        }
        AnomalyVerdict v;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "context_mismatch") v.kind = VerdictKind::ContextMismatch;
        else if (kind == "context_time_window") v.kind = VerdictKind::ContextTimeWindow;
        else if (kind == "physics_score") v.kind = VerdictKind::PhysicsScore;
        else throw std::runtime_error("unknown verdict kind '" + kind + "'");
        if (!j.at("lat").is_null()) {
            v.location = GeoPoint{j["lat"].get<double>(), j["lon"].get<double>()};
        }
        if (!j.at("time_s").is_null()) v.time_s = j["time_s"].get<double>();
        if (!j.at("expected").is_null()) {
            v.expected = maneuver_from_string(j["expected"].get<std::string>());
        }
        if (!j.at("observed").is_null()) {
            v.observed = maneuver_from_string(j["observed"].get<std::string>());
        }
        v.flagged = j.at("flagged").get<bool>();
        v.suppressed_by_alert = j.at("suppressed_by_alert").get<bool>();
        if (j.contains("trace_id")) v.trace_id = j["trace_id"].get<std::string>();
        if (j.contains("detail")) v.detail = j["detail"].get<std::string>();
        if (v.flagged && v.suppressed_by_alert) {
            throw std::runtime_error("verdict at line " + std::to_string(row) +
                                     " is both flagged and suppressed");
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace todsec
