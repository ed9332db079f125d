#include "todsec/vehicle.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "todsec/csv_util.hpp"
#include "todsec/geo.hpp"
#include "todsec/trace_io.hpp"

namespace todsec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("vehicle config: " + what);
}

std::string expected_header(std::size_t n_motors) {
    std::string h = "t_s,i_batt_a,p_batt_w";
    for (std::size_t m = 1; m <= n_motors; ++m) h += ",t_m" + std::to_string(m);
    for (std::size_t m = 1; m <= n_motors; ++m) h += ",w_m" + std::to_string(m);
    h += ",wa_rad,roll_rad,pitch_rad,yaw_rad,ax,ay,az";
    return h;
}

}  // namespace

void validate_config(const VehicleConfig& cfg) {
    require(cfg.mass_kg > 0, "mass must be positive");
    require(cfg.wheelbase_m > 0, "wheelbase must be positive");
    require(cfg.steering_ratio >= 1.0, "steering ratio must be at least 1");
    require(cfg.battery_v > 0, "battery voltage must be positive");
    const auto& d = cfg.drivetrain;
    require(d.n_motors == 1 || d.n_motors == 2 || d.n_motors == 4,
            "motor count must be 1, 2 or 4");
    require(d.max_total_torque_nm > 0, "max torque must be positive");
    require(d.wheel_radius_m > 0, "wheel radius must be positive");
    require(cfg.brake_decel_ms2 > 0, "brake deceleration must be positive");
    require(cfg.air_density_kgm3 > 0, "air density must be positive");
    require(cfg.drag_cda_m2 >= 0, "drag area must be non-negative");
    require(cfg.rolling_resistance >= 0, "rolling resistance must be non-negative");
    require(cfg.initial_speed_ms >= 0, "initial speed must be non-negative");
    require(cfg.substep_s > 0, "integration substep must be positive");
}

double steer_angle_rad(double swa_deg, const VehicleConfig& cfg) {
    return deg2rad(swa_deg) / cfg.steering_ratio;
}

double torque_per_motor_nm(double app_pct, const VehicleConfig& cfg) {
    return cfg.drivetrain.max_total_torque_nm * (app_pct / 100.0) /
           static_cast<double>(cfg.drivetrain.n_motors);
}

SimulationResult simulate(const ToDInputTrace& commands, const VehicleConfig& cfg) {
    validate_config(cfg);
    if (commands.size() == 0) throw std::invalid_argument("empty command trace");

    const std::size_t substeps =
        static_cast<std::size_t>(std::llround(commands.sample_period_s / cfg.substep_s));
    if (substeps == 0 ||
        std::abs(commands.sample_period_s - static_cast<double>(substeps) * cfg.substep_s) >
            1e-9) {
        throw std::invalid_argument("integration substep must divide the sample period");
    }

    const std::size_t n_motors = cfg.drivetrain.n_motors;
    const double dt = cfg.substep_s;

    SimulationResult result;
    PhysicalParameterTrace& phys = result.physical;
    phys.trace_id = commands.trace_id;
    phys.label = commands.label;
    phys.sample_period_s = commands.sample_period_s;
    phys.steering_ratio = cfg.steering_ratio;
    phys.n_motors = n_motors;
    phys.motor_torque_nm.resize(n_motors);
    phys.motor_speed_rads.resize(n_motors);

    VehicleState state;
    state.v_ms = cfg.initial_speed_ms;

    std::size_t substep_count = 0;
    for (std::size_t k = 0; k < commands.size(); ++k) {
        const CommandSample& cmd = commands.samples[k];
        const double steer = steer_angle_rad(cmd.swa_deg, cfg);
        const double t_motor = torque_per_motor_nm(cmd.app_pct, cfg);
        const double drive_force =
            t_motor * static_cast<double>(n_motors) / cfg.drivetrain.wheel_radius_m;

        double ax_eff = 0.0;
        for (std::size_t s = 0; s < substeps; ++s) {
            ++substep_count;
            const double v = state.v_ms;
            const double drag = 0.5 * cfg.air_density_kgm3 * cfg.drag_cda_m2 * v * v;
            const double rolling = cfg.rolling_resistance * cfg.mass_kg * kGravityMs2;
            const double brake = (cmd.bp != 0) ? cfg.brake_decel_ms2 : 0.0;
            const double dvdt = (drive_force - drag - rolling) / cfg.mass_kg - brake;

            const double v_new = std::max(0.0, v + dvdt * dt);
            ax_eff = (v_new - v) / dt;  // the acceleration the body felt

            const double yaw_rate = v * std::tan(steer) / cfg.wheelbase_m;
            state.x_m += v * std::cos(state.yaw_rad) * dt;
            state.y_m += v * std::sin(state.yaw_rad) * dt;
            state.yaw_rad += yaw_rate * dt;
            state.v_ms = v_new;

            if (!std::isfinite(state.v_ms) || !std::isfinite(state.yaw_rad) ||
                !std::isfinite(state.x_m) || !std::isfinite(state.y_m)) {
                throw std::runtime_error("numerical divergence at step " +
                                         std::to_string(substep_count));
            }
        }

        const double v = state.v_ms;
        const double yaw_rate = v * std::tan(steer) / cfg.wheelbase_m;
        const double ay = v * yaw_rate;
        const double w_motor = v / cfg.drivetrain.wheel_radius_m;  // direct drive
        const double p_batt = t_motor * w_motor * static_cast<double>(n_motors);
        const double i_batt = p_batt / cfg.battery_v;

        phys.i_batt_a.push_back(i_batt);
        phys.p_batt_w.push_back(p_batt);
        for (std::size_t m = 0; m < n_motors; ++m) {
            phys.motor_torque_nm[m].push_back(t_motor);
            phys.motor_speed_rads[m].push_back(w_motor);
        }
        phys.wa_rad.push_back(steer);
        phys.roll_rad.push_back(cfg.roll_gain_rad_per_ms2 * ay);
        phys.pitch_rad.push_back(-cfg.pitch_gain_rad_per_ms2 * ax_eff);
        phys.yaw_rad.push_back(state.yaw_rad);
        phys.ax_ms2.push_back(ax_eff);
        phys.ay_ms2.push_back(ay);
        phys.az_ms2.push_back(kGravityMs2);
        result.states.push_back(state);
    }
    return result;
}

void write_physical_trace(const PhysicalParameterTrace& trace,
                          const std::filesystem::path& csv_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write trace file: " + csv_path.string());

    csv << expected_header(trace.n_motors) << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        csv << format_double(static_cast<double>(i) * trace.sample_period_s) << ','
            << format_double(trace.i_batt_a[i]) << ',' << format_double(trace.p_batt_w[i]);
        for (std::size_t m = 0; m < trace.n_motors; ++m)
            csv << ',' << format_double(trace.motor_torque_nm[m][i]);
        for (std::size_t m = 0; m < trace.n_motors; ++m)
            csv << ',' << format_double(trace.motor_speed_rads[m][i]);
        csv << ',' << format_double(trace.wa_rad[i]) << ',' << format_double(trace.roll_rad[i])
            << ',' << format_double(trace.pitch_rad[i]) << ',' << format_double(trace.yaw_rad[i])
            << ',' << format_double(trace.ax_ms2[i]) << ',' << format_double(trace.ay_ms2[i])
            << ',' << format_double(trace.az_ms2[i]) << '\n';
    }

    nlohmann::json meta;
    meta["trace_id"] = trace.trace_id;
    meta["sample_period_s"] = trace.sample_period_s;
    meta["steering_ratio"] = trace.steering_ratio;
    meta["n_motors"] = trace.n_motors;
    meta["label"] = trace.label ? nlohmann::json(to_string(*trace.label)) : nlohmann::json(nullptr);
    std::ofstream meta_out(trace_sidecar_path(csv_path));
    if (!meta_out) throw std::runtime_error("cannot write trace sidecar for: " + csv_path.string());
    meta_out << meta.dump(2) << '\n';
}

PhysicalParameterTrace parse_physical_trace(const std::filesystem::path& csv_path) {
    const auto sidecar = trace_sidecar_path(csv_path);
    std::ifstream meta_in(sidecar);
    if (!meta_in) throw std::runtime_error("missing trace sidecar: " + sidecar.string());
    nlohmann::json meta = nlohmann::json::parse(meta_in);

    PhysicalParameterTrace trace;
    trace.trace_id = meta.at("trace_id").get<std::string>();
    trace.sample_period_s = meta.at("sample_period_s").get<double>();
    trace.steering_ratio = meta.at("steering_ratio").get<double>();
    trace.n_motors = meta.at("n_motors").get<std::size_t>();
    if (meta.contains("label") && !meta["label"].is_null()) {
        trace.label = maneuver_from_string(meta["label"].get<std::string>());
    }
    trace.motor_torque_nm.resize(trace.n_motors);
    trace.motor_speed_rads.resize(trace.n_motors);

    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open trace file: " + csv_path.string());

    std::string line;
    if (!std::getline(csv, line)) throw std::runtime_error("empty trace file: " + csv_path.string());
    while (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header(trace.n_motors)) {
        throw std::runtime_error("bad physical trace header: '" + line + "'");
    }

    const std::size_t n_fields = 3 + 2 * trace.n_motors + 7;
    std::size_t row = 1;
    while (std::getline(csv, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv_row(line);
        if (fields.size() != n_fields) {
            throw std::runtime_error("malformed CSV row " + std::to_string(row) + ": expected " +
                                     std::to_string(n_fields) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        std::size_t f = 1;  // skip t_s
        trace.i_batt_a.push_back(parse_csv_double("i_batt_a", row, fields[f++]));
        trace.p_batt_w.push_back(parse_csv_double("p_batt_w", row, fields[f++]));
        for (std::size_t m = 0; m < trace.n_motors; ++m)
            trace.motor_torque_nm[m].push_back(parse_csv_double("t_m", row, fields[f++]));
        for (std::size_t m = 0; m < trace.n_motors; ++m)
            trace.motor_speed_rads[m].push_back(parse_csv_double("w_m", row, fields[f++]));
        trace.wa_rad.push_back(parse_csv_double("wa_rad", row, fields[f++]));
        trace.roll_rad.push_back(parse_csv_double("roll_rad", row, fields[f++]));
        trace.pitch_rad.push_back(parse_csv_double("pitch_rad", row, fields[f++]));
        trace.yaw_rad.push_back(parse_csv_double("yaw_rad", row, fields[f++]));
        trace.ax_ms2.push_back(parse_csv_double("ax", row, fields[f++]));
        trace.ay_ms2.push_back(parse_csv_double("ay", row, fields[f++]));
        trace.az_ms2.push_back(parse_csv_double("az", row, fields[f++]));
    }
    return trace;
}

}  // namespace todsec
