#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "todsec/types.hpp"

namespace todsec {

/// Attack placement: where the noise burst lands in the trace.
struct WindowOfOpportunity {
    std::size_t injection_index = 0;  // first attacked sample
    double duration_s = 2.0;          // burst length
};

enum class NoiseKind { Gaussian, Uniform, ConstantOffset };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

/// Injected-fault distribution. amplitude_deg is the Gaussian sigma, the
/// Uniform half-range, or the constant offset.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;
    double amplitude_deg = 90.0;
    std::uint64_t seed = 0;
};

enum class AttackPlacement { P1_TurnOnset, P2_TurnMidpoint, Explicit };

std::string to_string(AttackPlacement p);
AttackPlacement placement_from_string(const std::string& s);

struct AttackSpec {
    AttackPlacement placement = AttackPlacement::Explicit;
    WindowOfOpportunity window;  // injection_index honored for Explicit only
    NoiseSpec noise;
    double onset_threshold_deg = 10.0;  // locator threshold for P1/P2
    double persistence_s = 0.5;         // how long SWA must stay above it
};

/// Number of samples eligible for modification: ceil(duration / period),
/// guarded against FP division landing just above an integer.
std::size_t window_length_samples(double duration_s, double sample_period_s);

/// Contiguous |SWA| > threshold run, endpoints inclusive.
struct SwaRegion {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin + 1; }
};

/// Smallest index where |SWA| exceeds the threshold and stays above it for
/// at least persistence_s. Falls back to the steepest-slope index when no
/// crossing persists; throws std::runtime_error("no maneuver present") on a
/// trace with constant SWA below the threshold.
std::size_t locate_turn_onset(const ToDInputTrace& trace, double threshold_deg,
                              double persistence_s = 0.5);

/// Same locator over a bare steering-angle channel (degrees) sampled at
/// sample_period_s; lets other representations of the same signal reuse the
/// semantics.
std::size_t locate_turn_onset(const std::vector<double>& swa_deg, double sample_period_s,
                              double threshold_deg, double persistence_s = 0.5);

/// The contiguous above-threshold run starting at the onset index.
SwaRegion locate_turn_region(const ToDInputTrace& trace, double threshold_deg,
                             double persistence_s = 0.5);

SwaRegion locate_turn_region(const std::vector<double>& swa_deg, double sample_period_s,
                             double threshold_deg, double persistence_s = 0.5);

/// Midpoint of that run; ties floor to the lower index.
std::size_t locate_turn_midpoint(const ToDInputTrace& trace, double threshold_deg,
                                 double persistence_s = 0.5);

/// Resolves P1/P2 placement against the trace; validates the window fits.
WindowOfOpportunity resolve_window(const ToDInputTrace& trace, const AttackSpec& spec);

/// Eq.-style additive fault injection: inside the window each SWA sample
/// becomes clamp(swa + eps_i, -450, 450) with eps_i drawn from the noise
/// spec's seeded stream; every sample outside the window, and the app/bp
/// channels everywhere, are copied bit for bit. The label is kept: the
/// attack corrupts the command, not the intent.
ToDInputTrace inject_fdi(const ToDInputTrace& trace, const AttackSpec& spec);

struct AttackManifestEntry {
    std::string trace_id;
    AttackPlacement placement = AttackPlacement::Explicit;
    std::size_t rho_index = 0;
    double duration_s = 0.0;
    NoiseKind noise_kind = NoiseKind::Gaussian;
    double amplitude_deg = 0.0;
    std::uint64_t seed = 0;
};

struct AttackSet {
    std::vector<ToDInputTrace> traces;
    std::vector<AttackManifestEntry> manifest;  // parallel to traces
};

/// Samples n_attacked traces uniformly without replacement (seeded), applies
/// inject_fdi with a per-trace noise seed derived from (seed, trace_id), and
/// emits the manifest. Selection keeps dataset order.
AttackSet build_attack_set(const std::vector<ToDInputTrace>& dataset, std::size_t n_attacked,
                           const AttackSpec& spec_template, std::uint64_t seed);

void write_attack_manifest(const std::vector<AttackManifestEntry>& manifest,
                           const std::filesystem::path& path);
std::vector<AttackManifestEntry> parse_attack_manifest(const std::filesystem::path& path);

}  // namespace todsec
