#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace todsec {

constexpr double kSwaMinDeg = -450.0;
constexpr double kSwaMaxDeg = 450.0;

/// Maneuver classes at an intersection. The physics classifier only ever
/// scores the three turn variants; Straight exists for route plans.
enum class ManeuverClass { Straight, LeftTurn, RightTurn, UTurn };

constexpr int kNumTurnClasses = 3;  // LeftTurn, RightTurn, UTurn

std::string to_string(ManeuverClass m);
ManeuverClass maneuver_from_string(const std::string& s);
bool is_turn_class(ManeuverClass m);

/// Index of a turn class in score vectors / confusion matrices.
/// Fixed order: LeftTurn = 0, RightTurn = 1, UTurn = 2.
int turn_class_index(ManeuverClass m);
ManeuverClass turn_class_from_index(int idx);

/// One driver-command sample: steering wheel angle in degrees, accelerator
/// pedal position in percent, brake pedal as a binary flag.
struct CommandSample {
    double swa_deg = 0.0;
    double app_pct = 0.0;
    int bp = 0;
};

/// Uniformly sampled driver-command time series.
struct ToDInputTrace {
    double sample_period_s = 0.1;
    std::vector<CommandSample> samples;
    std::optional<ManeuverClass> label;
    std::string trace_id;

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return sample_period_s * static_cast<double>(samples.size()); }
};

struct TraceViolation {
    std::size_t sample_index = 0;  // ignored for trace-level violations
    std::string field;
    std::string message;
};

struct TraceValidation {
    std::vector<TraceViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks every range invariant of a trace; returns all violations with
/// their sample index rather than stopping at the first.
TraceValidation validate_trace(const ToDInputTrace& trace);

/// Checked constructor: throws std::invalid_argument listing the first
/// violation if the trace does not validate.
ToDInputTrace make_trace(double sample_period_s, std::vector<CommandSample> samples,
                         std::optional<ManeuverClass> label, std::string trace_id);

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

bool geo_in_range(const GeoPoint& p);

enum class RoadCondition { Wet, Dry, IceSnow, Construction };
enum class TrafficLevel { Light, Moderate, Heavy };
enum class WeatherCondition { Clear, Rain, Fog, Snow };
enum class VehicleHealth { OK, Degraded, Fault };

std::string to_string(RoadCondition v);
std::string to_string(TrafficLevel v);
std::string to_string(WeatherCondition v);
std::string to_string(VehicleHealth v);
VehicleHealth health_from_string(const std::string& s);

/// External condition reported along the route (road user, obstruction,
/// emergency). Carried as a binary flag per event.
struct DynamicAlert {
    GeoPoint location;
    std::string kind;
    bool active = false;
};

/// Mission-level situation of the vehicle; determines the intended maneuver
/// upstream of this toolkit (route planning is out of scope).
struct DrivingContext {
    std::string mission;
    RoadCondition road = RoadCondition::Dry;
    TrafficLevel traffic = TrafficLevel::Light;
    WeatherCondition weather = WeatherCondition::Clear;
    double time_s = 0.0;  // UTC seconds since epoch
    GeoPoint location;
    std::vector<DynamicAlert> dynamic_factors;
};

enum class VerdictKind { ContextMismatch, ContextTimeWindow, PhysicsScore };

std::string to_string(VerdictKind k);

/// Outcome of one anomaly check. Construct through make_verdict so the
/// suppression invariant (suppressed implies not flagged) always holds.
struct AnomalyVerdict {
    VerdictKind kind = VerdictKind::ContextMismatch;
    std::optional<GeoPoint> location;
    std::optional<std::string> trace_id;
    std::optional<double> time_s;
    std::optional<ManeuverClass> expected;
    std::optional<ManeuverClass> observed;
    bool flagged = false;
    bool suppressed_by_alert = false;
    std::string detail;
};

AnomalyVerdict make_verdict(VerdictKind kind, std::optional<GeoPoint> location,
                            std::optional<std::string> trace_id, bool flagged,
                            bool suppressed_by_alert, std::string detail);

}  // namespace todsec
