#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "todsec/context.hpp"
#include "todsec/geo.hpp"
#include "todsec/rng.hpp"

using namespace todsec;

namespace {

// About 111.19 km per degree of latitude on the spherical model; offsets
// below are chosen against that scale.
constexpr double kDegPerMeterLat = 1.0 / 111194.9266;

RoutePlan grid_route(std::size_t n) {
    RoutePlan route;
    route.mission = "fixture";
    const ManeuverClass cycle[] = {ManeuverClass::LeftTurn, ManeuverClass::RightTurn,
                                   ManeuverClass::UTurn, ManeuverClass::Straight};
    for (std::size_t i = 0; i < n; ++i) {
        RouteIntersection ri;
        ri.geo = {40.0 + 0.01 * static_cast<double>(i), -75.0};  // ~1.1 km spacing
        ri.maneuver = cycle[i % 4];
        ri.eta_s = 60.0 * static_cast<double>(i);
        ri.eta_window_s = 300.0;
        route.intersections.push_back(ri);
    }
    return route;
}

/// Log that does exactly what the route says, when it says.
std::vector<ObservedEvent> faithful_log(const ExpectationStore& store) {
    std::vector<ObservedEvent> events;
    for (const ExpectationEntry& e : store.entries) {
        events.push_back({e.geo, e.maneuver, e.expected_time_s, std::nullopt,
                          VehicleHealth::OK});
    }
    return events;
}

std::size_t count_flagged(const std::vector<AnomalyVerdict>& vs) {
    return static_cast<std::size_t>(
        std::count_if(vs.begin(), vs.end(), [](const AnomalyVerdict& v) { return v.flagged; }));
}

std::size_t count_suppressed(const std::vector<AnomalyVerdict>& vs) {
    return static_cast<std::size_t>(std::count_if(
        vs.begin(), vs.end(), [](const AnomalyVerdict& v) { return v.suppressed_by_alert; }));
}

}  // namespace

TEST_CASE("haversine against hand-computed arcs") {
    const GeoPoint origin{40.0, -75.0};
    const GeoPoint near{40.0 + 29.0 * kDegPerMeterLat, -75.0};
    const GeoPoint far{40.0 + 50.0 * kDegPerMeterLat, -75.0};
    CHECK(haversine_m(origin, origin) == 0.0);
    CHECK(haversine_m(origin, near) == doctest::Approx(29.0).epsilon(1e-6));
    CHECK(haversine_m(origin, far) == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("store keeps intersections ordered by expected time") {
    RoutePlan route = grid_route(12);
    std::swap(route.intersections[2], route.intersections[9]);  // shuffle input order
    const ExpectationStore store = build_expectation_store(route);
    REQUIRE(store.entries.size() == 12);
    for (std::size_t i = 1; i < store.entries.size(); ++i) {
        CHECK(store.entries[i - 1].expected_time_s <= store.entries[i].expected_time_s);
    }
}

TEST_CASE("stores reject intersections inside one match radius") {
    RoutePlan route = grid_route(3);
    route.intersections[1].geo = route.intersections[0].geo;
    route.intersections[1].geo.lat += 10.0 * kDegPerMeterLat;  // 10 m apart
    CHECK_THROWS_WITH_AS(build_expectation_store(route, 30.0),
                         doctest::Contains("match radius"), std::runtime_error);
    CHECK(build_expectation_store(route, 5.0).entries.size() == 3);  // tighter radius is fine
}

TEST_CASE("empty routes build empty stores") {
    CHECK(build_expectation_store(RoutePlan{}).entries.empty());
}

TEST_CASE("matching respects the radius") {
    const ExpectationStore store = build_expectation_store(grid_route(5));
    const GeoPoint exact = store.entries[2].geo;
    GeoPoint close = exact;
    close.lat += 29.0 * kDegPerMeterLat;
    GeoPoint off = exact;
    off.lat += 50.0 * kDegPerMeterLat;

    REQUIRE(match_intersection(exact, store).has_value());
    CHECK(*match_intersection(exact, store) == 2);
    REQUIRE(match_intersection(close, store).has_value());
    CHECK(*match_intersection(close, store) == 2);
    CHECK(!match_intersection(off, store).has_value());
}

TEST_CASE("a faithful log raises no flags") {
    const ExpectationStore store = build_expectation_store(grid_route(12));
    const auto events = faithful_log(store);
    CHECK(count_flagged(detect_incorrect_maneuver(events, store)) == 0);
    CHECK(count_flagged(detect_incorrect_time(events, store)) == 0);
    CHECK(count_flagged(detect_with_alert_filter(events, store)) == 0);
}

TEST_CASE("one wrong maneuver yields exactly one flag at that geocode") {
    const ExpectationStore store = build_expectation_store(grid_route(12));
    auto events = faithful_log(store);
    events[4].maneuver = events[4].maneuver == ManeuverClass::RightTurn
                             ? ManeuverClass::LeftTurn
                             : ManeuverClass::RightTurn;
    const auto verdicts = detect_incorrect_maneuver(events, store);
    REQUIRE(verdicts.size() == events.size());
    CHECK(count_flagged(verdicts) == 1);
    CHECK(verdicts[4].flagged);
    REQUIRE(verdicts[4].location.has_value());
    CHECK(haversine_m(*verdicts[4].location, store.entries[4].geo) == 0.0);
    CHECK(verdicts[4].expected == store.entries[4].maneuver);
    CHECK(verdicts[4].observed == events[4].maneuver);
}

TEST_CASE("off-route events are reported but never flagged") {
    const ExpectationStore store = build_expectation_store(grid_route(4));
    ObservedEvent stray;
    stray.geo = {41.5, -75.0};
    stray.maneuver = ManeuverClass::UTurn;
    stray.time_s = 10.0;
    const auto verdicts = detect_incorrect_maneuver({stray}, store);
    REQUIRE(verdicts.size() == 1);
    CHECK(!verdicts[0].flagged);
    CHECK(verdicts[0].detail.find("off-route") != std::string::npos);
}

TEST_CASE("time window check is symmetric and strictly greater") {
    const ExpectationStore store = build_expectation_store(grid_route(3));
    auto events = faithful_log(store);

    SUBCASE("exactly on time") {
        CHECK(count_flagged(detect_incorrect_time(events, store)) == 0);
    }
    SUBCASE("600 s late is outside a 300 s window") {
        events[1].time_s += 600.0;
        const auto verdicts = detect_incorrect_time(events, store);
        CHECK(count_flagged(verdicts) == 1);
        CHECK(verdicts[1].flagged);
        CHECK(verdicts[1].kind == VerdictKind::ContextTimeWindow);
    }
    SUBCASE("299 s early stays inside") {
        events[1].time_s -= 299.0;
        CHECK(count_flagged(detect_incorrect_time(events, store)) == 0);
    }
    SUBCASE("exactly 300 s off is still inside (strict comparison)") {
        events[1].time_s += 300.0;
        CHECK(count_flagged(detect_incorrect_time(events, store)) == 0);
        events[1].time_s += 0.001;
        CHECK(count_flagged(detect_incorrect_time(events, store)) == 1);
    }
    SUBCASE("wrong maneuver alone does not trip the time check") {
        events[2].maneuver = ManeuverClass::UTurn;
        CHECK(count_flagged(detect_incorrect_time(events, store)) == 0);
    }
}

TEST_CASE("per-entry windows override the default") {
    RoutePlan route = grid_route(2);
    route.intersections[0].eta_window_s = 50.0;
    const ExpectationStore store = build_expectation_store(route);
    auto events = faithful_log(store);
    events[0].time_s += 60.0;  // outside 50 s, inside the 300 s default
    CHECK(count_flagged(detect_incorrect_time(events, store)) == 1);
}

TEST_CASE("alerts and degraded health suppress mismatches") {
    const ExpectationStore store = build_expectation_store(grid_route(6));

    SUBCASE("active alert shields a wrong maneuver") {
        auto events = faithful_log(store);
        events[1].maneuver = ManeuverClass::UTurn;
        events[1].alert = DynamicAlert{events[1].geo, "road_obstruction", true};
        const auto verdicts = detect_with_alert_filter(events, store);
        CHECK(count_flagged(verdicts) == 0);
        CHECK(count_suppressed(verdicts) == 1);
        CHECK(verdicts[1].suppressed_by_alert);
        CHECK(!verdicts[1].flagged);
    }
    SUBCASE("inactive alert shields nothing") {
        auto events = faithful_log(store);
        events[1].maneuver = ManeuverClass::UTurn;
        events[1].alert = DynamicAlert{events[1].geo, "stale", false};
        CHECK(count_flagged(detect_with_alert_filter(events, store)) == 1);
    }
    SUBCASE("fault health shields a time mismatch") {
        auto events = faithful_log(store);
        events[3].time_s += 1000.0;
        events[3].health = VehicleHealth::Fault;
        const auto verdicts = detect_with_alert_filter(events, store);
        CHECK(count_flagged(verdicts) == 0);
        CHECK(count_suppressed(verdicts) == 1);
    }
    SUBCASE("clean context flags plainly") {
        auto events = faithful_log(store);
        events[2].maneuver = ManeuverClass::RightTurn;
        const auto verdicts = detect_with_alert_filter(events, store);
        CHECK(count_flagged(verdicts) == 1);
        CHECK(count_suppressed(verdicts) == 0);
    }
    SUBCASE("an alert without any mismatch suppresses nothing") {
        auto events = faithful_log(store);
        events[0].alert = DynamicAlert{events[0].geo, "pedestrian", true};
        const auto verdicts = detect_with_alert_filter(events, store);
        CHECK(count_flagged(verdicts) == 0);
        CHECK(count_suppressed(verdicts) == 0);
    }
}

TEST_CASE("k injected flips produce exactly k flags, minus alerted ones") {
    const ExpectationStore store = build_expectation_store(grid_route(12));
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        auto events = faithful_log(store);
        const std::size_t k = rng.uniform_index(5);
        std::set<std::size_t> flipped;
        while (flipped.size() < k) flipped.insert(rng.uniform_index(events.size()));
        for (std::size_t idx : flipped) {
            events[idx].maneuver = events[idx].maneuver == ManeuverClass::LeftTurn
                                       ? ManeuverClass::RightTurn
                                       : ManeuverClass::LeftTurn;
        }
        // Shield a random subset of the flipped events with alerts.
        std::size_t shielded = 0;
        for (std::size_t idx : flipped) {
            if (rng.u01() < 0.4) {
                events[idx].alert = DynamicAlert{events[idx].geo, "alert", true};
                ++shielded;
            }
        }
        CHECK(count_flagged(detect_incorrect_maneuver(events, store)) == k);
        const auto filtered = detect_with_alert_filter(events, store);
        CHECK(count_flagged(filtered) == k - shielded);
        CHECK(count_suppressed(filtered) == shielded);
    }
}

TEST_CASE("filtered flags are a subset of the union of the plain checks") {
    const ExpectationStore store = build_expectation_store(grid_route(10));
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ObservedEvent> events = faithful_log(store);
        for (ObservedEvent& ev : events) {
            if (rng.u01() < 0.3) ev.maneuver = turn_class_from_index(
                static_cast<int>(rng.uniform_index(3)));
            if (rng.u01() < 0.3) ev.time_s += rng.uniform(-800.0, 800.0);
            if (rng.u01() < 0.2) ev.alert = DynamicAlert{ev.geo, "x", rng.u01() < 0.5};
            if (rng.u01() < 0.2) ev.health = VehicleHealth::Degraded;
        }
        const auto alg1 = detect_incorrect_maneuver(events, store);
        const auto alg2 = detect_incorrect_time(events, store);
        const auto alg3 = detect_with_alert_filter(events, store);
        REQUIRE(alg1.size() == events.size());
        REQUIRE(alg2.size() == events.size());
        REQUIRE(alg3.size() == events.size());
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (alg3[i].flagged) {
                CHECK((alg1[i].flagged || alg2[i].flagged));
            }
        }
    }
}

TEST_CASE("verdicts round-trip through JSON lines") {
    const ExpectationStore store = build_expectation_store(grid_route(8));
    auto events = faithful_log(store);
    events[0].maneuver = ManeuverClass::UTurn;
    events[5].time_s += 700.0;
    events[5].alert = DynamicAlert{events[5].geo, "construction", true};
    const auto verdicts = detect_with_alert_filter(events, store);

    const auto path = std::filesystem::temp_directory_path() / "todsec_verdicts.jsonl";
    write_verdicts_jsonl(verdicts, path);
    const auto back = parse_verdicts_jsonl(path);
    REQUIRE(back.size() == verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        CHECK(back[i].kind == verdicts[i].kind);
        CHECK(back[i].flagged == verdicts[i].flagged);
        CHECK(back[i].suppressed_by_alert == verdicts[i].suppressed_by_alert);
        CHECK(back[i].expected == verdicts[i].expected);
        CHECK(back[i].observed == verdicts[i].observed);
        if (verdicts[i].location) {
            CHECK(back[i].location->lat == verdicts[i].location->lat);
            CHECK(back[i].location->lon == verdicts[i].location->lon);
        }
        CHECK(back[i].time_s == verdicts[i].time_s);
    }
}

TEST_CASE("drive logs round-trip through JSON") {
    const ExpectationStore store = build_expectation_store(grid_route(5));
    auto events = faithful_log(store);
    events[2].health = VehicleHealth::Degraded;
    events[3].alert = DynamicAlert{{40.02, -75.0}, "emergency_vehicle", true};

    const auto path = std::filesystem::temp_directory_path() / "todsec_drive_log.json";
    write_drive_log(events, path);
    const auto back = parse_drive_log(path);
    REQUIRE(back.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(back[i].geo.lat == events[i].geo.lat);
        CHECK(back[i].geo.lon == events[i].geo.lon);
        CHECK(back[i].maneuver == events[i].maneuver);
        CHECK(back[i].time_s == events[i].time_s);
        CHECK(back[i].health == events[i].health);
        CHECK(back[i].alert.has_value() == events[i].alert.has_value());
        if (events[i].alert) {
            CHECK(back[i].alert->kind == events[i].alert->kind);
            CHECK(back[i].alert->active == events[i].alert->active);
        }
    }
}
