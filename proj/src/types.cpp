#include "todsec/types.hpp"

#include <cmath>

namespace todsec {

std::string to_string(ManeuverClass m) {
    switch (m) {
        case ManeuverClass::Straight: return "st";
        case ManeuverClass::LeftTurn: return "lt";
        case ManeuverClass::RightTurn: return "rt";
        case ManeuverClass::UTurn: return "ut";
    }
    throw std::logic_error("unreachable maneuver variant");
}

ManeuverClass maneuver_from_string(const std::string& s) {
    if (s == "st" || s == "straight") return ManeuverClass::Straight;
    if (s == "lt" || s == "left" || s == "left_turn") return ManeuverClass::LeftTurn;
    if (s == "rt" || s == "right" || s == "right_turn") return ManeuverClass::RightTurn;
    if (s == "ut" || s == "uturn" || s == "u_turn") return ManeuverClass::UTurn;
    throw std::invalid_argument("unknown maneuver string: '" + s + "'");
}

bool is_turn_class(ManeuverClass m) { return m != ManeuverClass::Straight; }

int turn_class_index(ManeuverClass m) {
    switch (m) {
        case ManeuverClass::LeftTurn: return 0;
        case ManeuverClass::RightTurn: return 1;
        case ManeuverClass::UTurn: return 2;
        case ManeuverClass::Straight: break;
    }
    throw std::invalid_argument("Straight is not a classifier class");
}

ManeuverClass turn_class_from_index(int idx) {
    switch (idx) {
        case 0: return ManeuverClass::LeftTurn;
        case 1: return ManeuverClass::RightTurn;
        case 2: return ManeuverClass::UTurn;
        default: throw std::invalid_argument("turn class index out of range");
    }
}

TraceValidation validate_trace(const ToDInputTrace& trace) {
    TraceValidation result;
    auto add = [&](std::size_t idx, const char* field, std::string msg) {
        result.violations.push_back({idx, field, std::move(msg)});
    };
    if (!(trace.sample_period_s > 0.0)) {
        add(0, "sample_period", "sample_period must be > 0");
    }
    if (trace.samples.empty()) {
        add(0, "samples", "trace must contain at least one sample");
    }
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const CommandSample& s = trace.samples[i];
        if (!std::isfinite(s.swa_deg) || s.swa_deg < kSwaMinDeg || s.swa_deg > kSwaMaxDeg) {
            add(i, "swa_deg", "swa outside [-450, 450] degrees");
        }
        if (!std::isfinite(s.app_pct) || s.app_pct < 0.0 || s.app_pct > 100.0) {
            add(i, "app_pct", "app outside [0, 100] percent");
        }
        if (s.bp != 0 && s.bp != 1) {
            add(i, "bp", "bp must be 0 or 1");
        }
    }
    return result;
}

ToDInputTrace make_trace(double sample_period_s, std::vector<CommandSample> samples,
                         std::optional<ManeuverClass> label, std::string trace_id) {
    ToDInputTrace trace{sample_period_s, std::move(samples), label, std::move(trace_id)};
    TraceValidation v = validate_trace(trace);
    if (!v.ok()) {
        const TraceViolation& first = v.violations.front();
        throw std::invalid_argument("invalid trace '" + trace.trace_id + "': " + first.message +
                                    " (field " + first.field + ", sample " +
                                    std::to_string(first.sample_index) + ")");
    }
    return trace;
}

bool geo_in_range(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

std::string to_string(RoadCondition v) {
    switch (v) {
        case RoadCondition::Wet: return "wet";
        case RoadCondition::Dry: return "dry";
        case RoadCondition::IceSnow: return "ice_snow";
        case RoadCondition::Construction: return "construction";
    }
    throw std::logic_error("unreachable road condition");
}

std::string to_string(TrafficLevel v) {
    switch (v) {
        case TrafficLevel::Light: return "light";
        case TrafficLevel::Moderate: return "moderate";
        case TrafficLevel::Heavy: return "heavy";
    }
    throw std::logic_error("unreachable traffic level");
}

std::string to_string(WeatherCondition v) {
    switch (v) {
        case WeatherCondition::Clear: return "clear";
        case WeatherCondition::Rain: return "rain";
        case WeatherCondition::Fog: return "fog";
        case WeatherCondition::Snow: return "snow";
    }
    throw std::logic_error("unreachable weather condition");
}

std::string to_string(VehicleHealth v) {
    switch (v) {
        case VehicleHealth::OK: return "OK";
        case VehicleHealth::Degraded: return "Degraded";
        case VehicleHealth::Fault: return "Fault";
    }
    throw std::logic_error("unreachable health state");
}

VehicleHealth health_from_string(const std::string& s) {
    if (s == "OK" || s == "ok") return VehicleHealth::OK;
    if (s == "Degraded" || s == "degraded") return VehicleHealth::Degraded;
    if (s == "Fault" || s == "fault") return VehicleHealth::Fault;
    throw std::invalid_argument("unknown vehicle health: '" + s + "'");
}

std::string to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::ContextMismatch: return "context_mismatch";
        case VerdictKind::ContextTimeWindow: return "context_time_window";
        case VerdictKind::PhysicsScore: return "physics_score";
    }
    throw std::logic_error("unreachable verdict kind");
}

AnomalyVerdict make_verdict(VerdictKind kind, std::optional<GeoPoint> location,
                            std::optional<std::string> trace_id, bool flagged,
                            bool suppressed_by_alert, std::string detail) {
    if (suppressed_by_alert && flagged) {
        throw std::logic_error("a suppressed verdict cannot be flagged");
    }
    AnomalyVerdict v;
    v.kind = kind;
    v.location = location;
    v.trace_id = std::move(trace_id);
    v.flagged = flagged;
    v.suppressed_by_alert = suppressed_by_alert;
    v.detail = std::move(detail);
    return v;
}

}  // namespace todsec
