#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "todsec/geo.hpp"
#include "todsec/vehicle.hpp"

using namespace todsec;

namespace {

ToDInputTrace constant_trace(double swa, double app, int bp, std::size_t n) {
    ToDInputTrace t;
    t.sample_period_s = 0.1;
    t.trace_id = "const";
    for (std::size_t i = 0; i < n; ++i) t.samples.push_back({swa, app, bp});
    return t;
}

/// Least-squares circle fit (Kasa): x^2 + y^2 + D x + E y + F = 0.
double fit_circle_radius(const std::vector<VehicleState>& states) {
    const auto n = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = states[i].x_m;
        const double y = states[i].y_m;
        A(i, 0) = x;
        A(i, 1) = y;
        A(i, 2) = 1.0;
        b(i) = -(x * x + y * y);
    }
    const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(b);
    const double cx = -sol(0) / 2.0;
    const double cy = -sol(1) / 2.0;
    return std::sqrt(cx * cx + cy * cy - sol(2));
}

}  // namespace

TEST_CASE("steering and torque conversions") {
    const VehicleConfig cfg;
    CHECK(steer_angle_rad(450.0, cfg) == doctest::Approx(deg2rad(30.0)).epsilon(1e-12));
    CHECK(steer_angle_rad(-450.0, cfg) == doctest::Approx(deg2rad(-30.0)).epsilon(1e-12));
    CHECK(torque_per_motor_nm(100.0, cfg) == doctest::Approx(400.0));
    VehicleConfig quad = cfg;
    quad.drivetrain.n_motors = 4;
    CHECK(torque_per_motor_nm(100.0, quad) == doctest::Approx(100.0));
}

TEST_CASE("constant steering drives a circle of radius L/tan(steer)") {
    // app chosen to roughly balance drag + rolling resistance at 8 m/s, so
    // the arc covers a decent angle without the speed collapsing.
    const ToDInputTrace t = constant_trace(30.0, 17.0, 0, 300);
    const VehicleConfig cfg;
    const SimulationResult res = simulate(t, cfg);
    const double expected = cfg.wheelbase_m / std::tan(steer_angle_rad(30.0, cfg));
    const double fitted = fit_circle_radius(res.states);
    CHECK(std::abs(fitted - expected) / expected < 0.005);
}

TEST_CASE("power identity holds on every emitted sample") {
    for (std::size_t motors : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
        VehicleConfig cfg;
        cfg.drivetrain.n_motors = motors;
        const SimulationResult res = simulate(constant_trace(15.0, 40.0, 0, 100), cfg);
        const PhysicalParameterTrace& p = res.physical;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double sum = 0.0;
            for (std::size_t m = 0; m < motors; ++m) {
                sum += p.motor_torque_nm[m][i] * p.motor_speed_rads[m][i];
            }
            CHECK(p.p_batt_w[i] == doctest::Approx(sum).epsilon(1e-9));
            CHECK(p.i_batt_a[i] * cfg.battery_v == doctest::Approx(p.p_batt_w[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("drivetrain layout does not change vehicle dynamics") {
    const ToDInputTrace t = constant_trace(-25.0, 35.0, 0, 150);
    VehicleConfig single;
    VehicleConfig quad;
    quad.drivetrain.n_motors = 4;
    const SimulationResult a = simulate(t, single);
    const SimulationResult b = simulate(t, quad);
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK(a.states[i].v_ms == doctest::Approx(b.states[i].v_ms).epsilon(1e-12));
        CHECK(a.physical.p_batt_w[i] == doctest::Approx(b.physical.p_batt_w[i]).epsilon(1e-12));
    }
}

TEST_CASE("braking stops the vehicle and pitches it forward") {
    const SimulationResult res = simulate(constant_trace(0.0, 0.0, 1, 50), VehicleConfig{});
    const auto& states = res.states;
    for (std::size_t i = 1; i < states.size(); ++i) {
        CHECK(states[i].v_ms <= states[i - 1].v_ms + 1e-12);
    }
    CHECK(states.back().v_ms == 0.0);
    CHECK(res.physical.pitch_rad.front() > 0.0);  // decelerating: nose dives, pitch > 0
    CHECK(res.physical.ax_ms2.front() < -5.0);
    CHECK(res.physical.ax_ms2.back() == 0.0);  // at rest nothing accelerates
}

TEST_CASE("mirrored steering mirrors the lateral quantities") {
    ToDInputTrace t = constant_trace(0.0, 25.0, 0, 200);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t.samples[i].swa_deg = 80.0 * std::sin(static_cast<double>(i) / 30.0);
    }
    ToDInputTrace m = t;
    for (auto& s : m.samples) s.swa_deg = -s.swa_deg;

    const SimulationResult a = simulate(t, VehicleConfig{});
    const SimulationResult b = simulate(m, VehicleConfig{});
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK(a.states[i].v_ms == doctest::Approx(b.states[i].v_ms).epsilon(1e-9));
        CHECK(a.states[i].x_m == doctest::Approx(b.states[i].x_m).epsilon(1e-9));
        CHECK(a.states[i].y_m == doctest::Approx(-b.states[i].y_m).epsilon(1e-9));
        CHECK(a.physical.yaw_rad[i] == doctest::Approx(-b.physical.yaw_rad[i]).epsilon(1e-9));
        CHECK(a.physical.roll_rad[i] == doctest::Approx(-b.physical.roll_rad[i]).epsilon(1e-9));
        CHECK(a.physical.ay_ms2[i] == doctest::Approx(-b.physical.ay_ms2[i]).epsilon(1e-9));
    }
}

TEST_CASE("left turns roll the body left") {
    const SimulationResult res = simulate(constant_trace(90.0, 25.0, 0, 100), VehicleConfig{});
    CHECK(res.physical.roll_rad.back() > 0.0);
    CHECK(res.physical.ay_ms2.back() > 0.0);
    CHECK(res.physical.az_ms2.back() == kGravityMs2);
}

TEST_CASE("output stays on the input grid") {
    const SimulationResult res = simulate(constant_trace(10.0, 20.0, 0, 123), VehicleConfig{});
    CHECK(res.physical.size() == 123);
    CHECK(res.states.size() == 123);
    CHECK(res.physical.feature_count() == 11);  // single motor: 2 + 2 + 7
}

TEST_CASE("a substep that does not divide the period is rejected") {
    VehicleConfig cfg;
    cfg.substep_s = 0.03;
    CHECK_THROWS_AS(simulate(constant_trace(0.0, 0.0, 0, 10), cfg), std::invalid_argument);
}

TEST_CASE("bad configs are rejected with the offending field") {
    VehicleConfig cfg;
    cfg.drivetrain.n_motors = 3;
    CHECK_THROWS_WITH_AS(simulate(constant_trace(0, 0, 0, 2), cfg),
                         doctest::Contains("motor count"), std::invalid_argument);
    cfg = VehicleConfig{};
    cfg.mass_kg = -1.0;
    CHECK_THROWS_WITH_AS(simulate(constant_trace(0, 0, 0, 2), cfg), doctest::Contains("mass"),
                         std::invalid_argument);
}

TEST_CASE("runaway states raise a divergence error") {
    VehicleConfig cfg;
    cfg.drivetrain.max_total_torque_nm = 1e308;  // force overflows to inf
    CHECK_THROWS_WITH_AS(simulate(constant_trace(0.0, 100.0, 0, 10), cfg),
                         doctest::Contains("numerical divergence"), std::runtime_error);
}

TEST_CASE("physical traces round-trip through CSV") {
    VehicleConfig cfg;
    cfg.drivetrain.n_motors = 2;
    ToDInputTrace t = constant_trace(45.0, 30.0, 0, 25);
    t.trace_id = "phys_rt";
    t.label = ManeuverClass::LeftTurn;
    const PhysicalParameterTrace p = simulate(t, cfg).physical;

    const auto path = std::filesystem::temp_directory_path() / "todsec_phys_rt.csv";
    write_physical_trace(p, path);
    const PhysicalParameterTrace back = parse_physical_trace(path);

    CHECK(back.trace_id == p.trace_id);
    CHECK(back.label == p.label);
    CHECK(back.n_motors == 2);
    CHECK(back.steering_ratio == p.steering_ratio);
    REQUIRE(back.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(back.i_batt_a[i] == p.i_batt_a[i]);
        CHECK(back.p_batt_w[i] == p.p_batt_w[i]);
        for (std::size_t m = 0; m < 2; ++m) {
            CHECK(back.motor_torque_nm[m][i] == p.motor_torque_nm[m][i]);
            CHECK(back.motor_speed_rads[m][i] == p.motor_speed_rads[m][i]);
        }
        CHECK(back.wa_rad[i] == p.wa_rad[i]);
        CHECK(back.roll_rad[i] == p.roll_rad[i]);
        CHECK(back.pitch_rad[i] == p.pitch_rad[i]);
        CHECK(back.yaw_rad[i] == p.yaw_rad[i]);
        CHECK(back.ax_ms2[i] == p.ax_ms2[i]);
        CHECK(back.ay_ms2[i] == p.ay_ms2[i]);
        CHECK(back.az_ms2[i] == p.az_ms2[i]);
    }
}
