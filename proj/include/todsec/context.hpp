#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "todsec/route.hpp"
#include "todsec/types.hpp"

namespace todsec {

/// One expected maneuver along the mission, keyed by geocode.
struct ExpectationEntry {
    GeoPoint geo;
    ManeuverClass maneuver = ManeuverClass::Straight;
    double expected_time_s = 0.0;
    double window_s = 300.0;
};

/// Immutable lookup table of what should happen where. Entries are ordered
/// by expected time; no two lie within match_radius_m of each other, so a
/// position can match at most one entry.
struct ExpectationStore {
    std::vector<ExpectationEntry> entries;
    double match_radius_m = 30.0;
};

/// A maneuver the vehicle actually performed, as reported by telemetry.
struct ObservedEvent {
    GeoPoint geo;
    ManeuverClass maneuver = ManeuverClass::Straight;
    double time_s = 0.0;
    std::optional<DynamicAlert> alert;
    VehicleHealth health = VehicleHealth::OK;
};

/// Builds the store from a route plan. Throws std::runtime_error when two
/// intersections violate the spacing invariant for the given radius.
ExpectationStore build_expectation_store(const RoutePlan& route, double match_radius_m = 30.0);

/// Index of the unique entry within match_radius_m of the position, if any.
/// If degenerate inputs put several in range, the nearest wins.
std::optional<std::size_t> match_intersection(const GeoPoint& geo, const ExpectationStore& store);

/// Stage-1 check: at every matched intersection, flag events whose maneuver
/// differs from the expected one. Off-route events yield informational,
/// unflagged verdicts. One verdict per event, in event order.
std::vector<AnomalyVerdict> detect_incorrect_maneuver(const std::vector<ObservedEvent>& events,
                                                      const ExpectationStore& store);

/// Stage-1 check: flag matched events whose time differs from the expected
/// time by strictly more than the entry's window (falling back to
/// default_window_s when the entry has none). Maneuver identity is ignored.
std::vector<AnomalyVerdict> detect_incorrect_time(const std::vector<ObservedEvent>& events,
                                                  const ExpectationStore& store,
                                                  double default_window_s = 300.0);

/// Combined maneuver+time check with dynamic-alert filtering: a mismatch
/// that coincides with an active alert or non-OK vehicle health is reported
/// as suppressed instead of flagged. Flags are a subset of the union of the
/// two checks above; suppression only ever removes flags.
std::vector<AnomalyVerdict> detect_with_alert_filter(const std::vector<ObservedEvent>& events,
                                                     const ExpectationStore& store,
                                                     double default_window_s = 300.0);

/// Drive-log JSON: {"events": [{lat, lon, maneuver, time_s, health, alert}]}.
std::vector<ObservedEvent> parse_drive_log(const std::filesystem::path& path);
void write_drive_log(const std::vector<ObservedEvent>& events, const std::filesystem::path& path);

/// One JSON object per line: {kind, lat, lon, time_s, expected, observed,
/// flagged, suppressed_by_alert} with trace_id/detail appended when set.
void write_verdicts_jsonl(const std::vector<AnomalyVerdict>& verdicts,
                          const std::filesystem::path& path);
std::vector<AnomalyVerdict> parse_verdicts_jsonl(const std::filesystem::path& path);

}  // namespace todsec
