#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "todsec/types.hpp"

namespace todsec {

inline constexpr double kGravityMs2 = 9.80665;

/// Electric drivetrain: 1, 2 or 4 direct-drive wheel motors sharing the
/// commanded torque equally.
struct DrivetrainConfig {
    std::size_t n_motors = 1;            // 1 = single, 2 = dual, 4 = quad
    double max_total_torque_nm = 400.0;  // at 100 % accelerator
    double wheel_radius_m = 0.33;
};

struct VehicleConfig {
    double mass_kg = 1800.0;
    double wheelbase_m = 2.9;
    double steering_ratio = 15.0;  // SWA degrees per road-wheel degree
    double battery_v = 400.0;
    DrivetrainConfig drivetrain;
    double brake_decel_ms2 = 6.0;  // applied while bp == 1
    double air_density_kgm3 = 1.225;
    double drag_cda_m2 = 0.7;
    double rolling_resistance = 0.01;
    double roll_gain_rad_per_ms2 = 0.02;    // quasi-static body roll vs a_y
    double pitch_gain_rad_per_ms2 = 0.015;  // quasi-static body pitch vs a_x
    double initial_speed_ms = 8.0;
    double substep_s = 0.01;  // forward-Euler integration step
};

/// Throws std::invalid_argument describing the first bad field.
void validate_config(const VehicleConfig& cfg);

struct VehicleState {
    double v_ms = 0.0;
    double yaw_rad = 0.0;
    double x_m = 0.0;
    double y_m = 0.0;
};

/// Road-wheel steer angle for a steering-wheel angle, in radians.
double steer_angle_rad(double swa_deg, const VehicleConfig& cfg);

/// Per-motor torque for an accelerator position.
double torque_per_motor_nm(double app_pct, const VehicleConfig& cfg);

/// Sensor channels sampled on the output grid; motor channels run over the
/// configured motor count. Stored one vector per channel.
struct PhysicalParameterTrace {
    std::string trace_id;
    std::optional<ManeuverClass> label;
    double sample_period_s = 0.1;
    double steering_ratio = 15.0;
    std::size_t n_motors = 1;

    std::vector<double> i_batt_a;
    std::vector<double> p_batt_w;
    std::vector<std::vector<double>> motor_torque_nm;   // [motor][sample]
    std::vector<std::vector<double>> motor_speed_rads;  // [motor][sample]
    std::vector<double> wa_rad;
    std::vector<double> roll_rad;
    std::vector<double> pitch_rad;
    std::vector<double> yaw_rad;
    std::vector<double> ax_ms2;
    std::vector<double> ay_ms2;
    std::vector<double> az_ms2;

    std::size_t size() const { return wa_rad.size(); }
    std::size_t feature_count() const { return 2 + 2 * n_motors + 7; }
};

struct SimulationResult {
    PhysicalParameterTrace physical;
    std::vector<VehicleState> states;  // state at each output sample
};

/// Runs the bicycle-model plant over a command trace: commands are held for
/// one sample period each and integrated with forward Euler at substep_s,
/// emitting the last substep of every period onto the output grid. Output
/// length equals input length. Throws std::runtime_error("numerical
/// divergence at step k") if the state leaves the finite range.
SimulationResult simulate(const ToDInputTrace& commands, const VehicleConfig& cfg);

/// CSV (`t_s,i_batt_a,p_batt_w,t_m1..,w_m1..,wa_rad,roll_rad,pitch_rad,
/// yaw_rad,ax,ay,az`) plus a `.meta.json` sidecar carrying trace identity.
void write_physical_trace(const PhysicalParameterTrace& trace,
                          const std::filesystem::path& csv_path);
PhysicalParameterTrace parse_physical_trace(const std::filesystem::path& csv_path);

}  // namespace todsec
