#include "todsec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "todsec/geo.hpp"
#include "todsec/rng.hpp"

namespace todsec {

namespace {

double cosine_lobe(double t, double onset, double dur) {
    if (t < onset || t > onset + dur) return 0.0;
    return 0.5 * (1.0 - std::cos(2.0 * kPi * (t - onset) / dur));
}

// Flat-top profile: cosine ramps of length `ramp` at both ends, unit plateau
// in between.
double plateau_lobe(double t, double onset, double dur, double ramp) {
    if (t < onset || t > onset + dur) return 0.0;
    const double u = t - onset;
    if (u < ramp) return 0.5 * (1.0 - std::cos(kPi * u / ramp));
    if (u > dur - ramp) return 0.5 * (1.0 - std::cos(kPi * (dur - u) / ramp));
    return 1.0;
}

struct ClassSpec {
    ManeuverClass label;
    const char* prefix;
    int count;
    TurnProfileRange range;
    double sign;
    bool plateau;
};

SyntheticTrace make_turn_trace(const SyntheticGenConfig& cfg, const ClassSpec& spec,
                               const std::string& trace_id, Rng rng) {
    const std::size_t n =
        static_cast<std::size_t>(std::llround(cfg.trace_len_s / cfg.sample_period_s));
    const double dt = cfg.sample_period_s;

    const double peak = rng.uniform(spec.range.peak_lo_deg, spec.range.peak_hi_deg);
    const double dur = rng.uniform(spec.range.dur_lo_s, spec.range.dur_hi_s);
    const double center = cfg.trace_len_s / 2.0 + rng.uniform(-cfg.onset_jitter_s, cfg.onset_jitter_s);
    const double onset = center - dur / 2.0;

    const double app_cruise = rng.uniform(cfg.app_cruise_lo_pct, cfg.app_cruise_hi_pct);
    const double app_turn = rng.uniform(cfg.app_turn_lo_pct, cfg.app_turn_hi_pct);
    const double app_wobble_phase = rng.uniform(0.0, 2.0 * kPi);

    double brake_len = 0.0;
    if (spec.plateau) {
        brake_len = rng.uniform(cfg.uturn_brake_lo_s, cfg.uturn_brake_hi_s);
    }
    const double brake_start = onset - brake_len;

    // Ornstein-Uhlenbeck noise so straight segments are never exactly zero.
    const double ou_decay = std::exp(-dt / cfg.swa_noise_tau_s);
    const double ou_step = cfg.swa_noise_sigma_deg * std::sqrt(1.0 - ou_decay * ou_decay);
    double ou = cfg.swa_noise_sigma_deg * rng.gaussian();

    std::vector<CommandSample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double shape = spec.plateau ? plateau_lobe(t, onset, dur, cfg.uturn_ramp_s)
                                          : cosine_lobe(t, onset, dur);
        double swa = spec.sign * peak * shape + ou;
        ou = ou * ou_decay + ou_step * rng.gaussian();

        const bool braking = spec.plateau && t >= brake_start && t < onset;
        double app = app_cruise + 2.0 * std::sin(2.0 * kPi * t / 18.0 + app_wobble_phase) -
                     (app_cruise - app_turn) * shape;
        if (braking) app = 0.0;

        samples[i].swa_deg = std::clamp(swa, kSwaMinDeg, kSwaMaxDeg);
        samples[i].app_pct = std::clamp(app, 0.0, 100.0);
        samples[i].bp = braking ? 1 : 0;
    }

    SyntheticTrace out;
    out.trace = make_trace(dt, std::move(samples), spec.label, trace_id);
    out.truth = TurnTruth{onset, dur, center, spec.sign * peak};
    return out;
}

}  // namespace

void validate_config(const SyntheticGenConfig& cfg) {
    if (cfg.count_left < 1 || cfg.count_right < 1 || cfg.count_uturn < 1) {
        throw std::invalid_argument("class counts must be >= 1");
    }
    if (!(cfg.trace_len_s > 0.0) || !(cfg.sample_period_s > 0.0)) {
        throw std::invalid_argument("trace length and sample period must be > 0");
    }
    for (const TurnProfileRange* r : {&cfg.left, &cfg.right, &cfg.uturn}) {
        if (r->peak_lo_deg <= 0.0 || r->peak_hi_deg < r->peak_lo_deg ||
            r->peak_hi_deg > kSwaMaxDeg) {
            throw std::invalid_argument("turn peak range inconsistent with SWA bounds");
        }
        if (r->dur_lo_s <= 0.0 || r->dur_hi_s < r->dur_lo_s) {
            throw std::invalid_argument("turn duration range invalid");
        }
        if (r->dur_hi_s + 2.0 * cfg.onset_jitter_s > cfg.trace_len_s) {
            throw std::invalid_argument("turn cannot fit in the trace at maximum jitter");
        }
    }
    // Worst-case |SWA integral| ordering between U-turns and left turns must
    // respect the configured factor; both bounds follow from the profile
    // shapes (cosine lobe integral = peak*dur/2, plateau = peak*(dur-ramp)).
    const double left_max = cfg.left.peak_hi_deg * cfg.left.dur_hi_s / 2.0;
    const double uturn_min = cfg.uturn.peak_lo_deg * (cfg.uturn.dur_lo_s - cfg.uturn_ramp_s);
    if (uturn_min < cfg.uturn_integral_factor * left_max) {
        throw std::invalid_argument("U-turn integral floor below factor * left-turn ceiling");
    }
}

std::vector<SyntheticTrace> generate_synthetic_dataset(const SyntheticGenConfig& cfg) {
    validate_config(cfg);
    const Rng master(cfg.seed);
    const ClassSpec specs[] = {
        {ManeuverClass::LeftTurn, "lt", cfg.count_left, cfg.left, +1.0, false},
        {ManeuverClass::RightTurn, "rt", cfg.count_right, cfg.right, -1.0, false},
        {ManeuverClass::UTurn, "ut", cfg.count_uturn, cfg.uturn, +1.0, true},
    };
    std::vector<SyntheticTrace> dataset;
    for (const ClassSpec& spec : specs) {
        for (int k = 0; k < spec.count; ++k) {
            char id[16];
            std::snprintf(id, sizeof(id), "%s_%03d", spec.prefix, k);
            dataset.push_back(make_turn_trace(cfg, spec, id, master.fork(id)));
        }
    }
    return dataset;
}

}  // namespace todsec
