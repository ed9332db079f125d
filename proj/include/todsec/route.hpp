#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "todsec/types.hpp"

namespace todsec {

/// One planned intersection: where, what maneuver, and when (ETA with a
/// symmetric tolerance window).
struct RouteIntersection {
    GeoPoint geo;
    ManeuverClass maneuver = ManeuverClass::Straight;
    double eta_s = 0.0;
    double eta_window_s = 300.0;
};

struct RoutePlan {
    std::string mission;
    std::vector<std::string> stops;
    std::vector<RouteIntersection> intersections;  // ordered by eta_s
};

/// Parses a route JSON document. Intersections are returned ordered by eta_s.
/// Throws std::runtime_error on unknown maneuver strings, non-positive ETA
/// windows, or two intersections closer than match_radius_m (ambiguous
/// geocode matching).
RoutePlan parse_route(const std::filesystem::path& path, double match_radius_m = 30.0);

RoutePlan parse_route_json(const std::string& text, double match_radius_m = 30.0);

void write_route(const RoutePlan& route, const std::filesystem::path& path);

}  // namespace todsec
