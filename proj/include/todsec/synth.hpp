#pragma once

#include <cstdint>
#include <vector>

#include "todsec/types.hpp"

namespace todsec {

/// Amplitude/duration ranges of one turn class. Steering lobes are raised
/// cosines (U-turns get a flat plateau with cosine ramps).
struct TurnProfileRange {
    double peak_lo_deg = 150.0;
    double peak_hi_deg = 350.0;
    double dur_lo_s = 3.0;
    double dur_hi_s = 4.5;
};

struct SyntheticGenConfig {
    int count_left = 75;
    int count_right = 78;
    int count_uturn = 62;

    double trace_len_s = 40.0;
    double sample_period_s = 0.1;
    double onset_jitter_s = 5.0;  // turn center = mid-trace +/- this

    TurnProfileRange left{150.0, 350.0, 3.0, 4.5};
    TurnProfileRange right{150.0, 350.0, 3.0, 4.5};
    TurnProfileRange uturn{380.0, 430.0, 6.5, 7.5};
    double uturn_ramp_s = 1.0;  // plateau edge ramps, inside the duration

    // Smooth measurement-like noise on SWA (Ornstein-Uhlenbeck process).
    double swa_noise_sigma_deg = 3.0;
    double swa_noise_tau_s = 0.5;

    // Accelerator profile: cruise level with a dip while turning.
    double app_cruise_lo_pct = 15.0;
    double app_cruise_hi_pct = 30.0;
    double app_turn_lo_pct = 5.0;
    double app_turn_hi_pct = 15.0;

    // U-turns brake briefly just before the turn.
    double uturn_brake_lo_s = 0.4;
    double uturn_brake_hi_s = 0.8;

    // Required ratio between any U-turn's |SWA integral| and any left turn's.
    double uturn_integral_factor = 2.0;

    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument if counts or ranges are inconsistent
/// (counts < 1, peaks beyond the SWA bound, U-turn integral floor below
/// factor * left-turn integral ceiling).
void validate_config(const SyntheticGenConfig& cfg);

/// Generator-side ground truth for one trace, used to benchmark locators.
struct TurnTruth {
    double onset_s = 0.0;     // lobe start
    double duration_s = 0.0;  // lobe extent
    double center_s = 0.0;    // lobe midpoint (peak for cosine lobes)
    double peak_deg = 0.0;    // signed peak amplitude
};

struct SyntheticTrace {
    ToDInputTrace trace;
    TurnTruth truth;
};

/// Deterministic labeled dataset: count_left + count_right + count_uturn
/// traces, one maneuver each, byte-reproducible per seed. Per-trace noise
/// streams are keyed by trace id, so generation order cannot change results.
std::vector<SyntheticTrace> generate_synthetic_dataset(const SyntheticGenConfig& cfg);

}  // namespace todsec
