#pragma once

#include <cstdint>
#include <filesystem>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "todsec/attack.hpp"
#include "todsec/context.hpp"
#include "todsec/detect.hpp"
#include "todsec/metrics.hpp"
#include "todsec/ml/train.hpp"
#include "todsec/route.hpp"
#include "todsec/synth.hpp"
#include "todsec/vehicle.hpp"

namespace todsec {

/// Attack settings shared by the P1 and P2 sets of one experiment.
struct ExperimentAttackConfig {
    std::size_t n_attacked = 31;
    double duration_s = 2.0;
    NoiseKind noise_kind = NoiseKind::Gaussian;
    double amplitude_deg = 90.0;
};

/// Context-stage fixture: a seeded synthetic route, a faithful drive log,
/// then `flips` wrong-maneuver events of which `alerts` coincide with an
/// active dynamic alert.
struct ExperimentContextConfig {
    std::size_t n_intersections = 12;
    std::size_t flips = 3;
    std::size_t alerts = 1;
};

/// Full experiment description. The JSON schema is versioned; every field
/// has a default, so an empty document is a valid (if heavy) experiment.
struct ExperimentConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;

    SyntheticGenConfig generator;
    VehicleConfig vehicle;

    std::vector<ml::ModelKind> models{std::begin(ml::kAllModelKinds), std::end(ml::kAllModelKinds)};
    ml::TrainConfig train;
    /// Hyperparameters for the full-sequence comparison models; defaults to
    /// `train` when absent from the config file.
    std::optional<ml::TrainConfig> full_train;
    ml::WindowConfig window;
    bool compare_full_sequence = true;
    double test_fraction = 0.2;

    ExperimentAttackConfig attack;
    ExperimentContextConfig context;

    /// Optional route file (resolved relative to the config document);
    /// replaces the synthetic route fixture when set.
    std::optional<std::filesystem::path> route_file;

    bool emit_plots = false;
};

/// Parses a JSON experiment config. Unknown keys are rejected so typos
/// cannot silently fall back to defaults. Relative paths inside the document
/// are resolved against the document's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir);

/// The 4/4/4 Tree-only configuration used in docs and smoke tests.
ExperimentConfig smoke_experiment_config();

/// Evenly spaced synthetic route: n intersections ~1.1 km apart cycling
/// left / right / U-turn / straight, one minute between ETAs.
RoutePlan route_fixture(std::size_t n_intersections, std::uint64_t seed);

/// Faithful log for the store, then `flips` seeded wrong-maneuver events of
/// which the first `alerts` carry an active coincident alert. flips must not
/// exceed the store size, alerts must not exceed flips.
std::vector<ObservedEvent> drive_log_with_flips(const ExpectationStore& store, std::size_t flips,
                                                std::size_t alerts, std::uint64_t seed);

/// One clean-classification table: a model kind evaluated on the held-out
/// split under one windowing mode.
struct CleanEval {
    ml::ModelKind kind = ml::ModelKind::Tree;
    bool focused = true;
    ConfusionMatrix cm;
    double macro_f1 = 0.0;
};

/// One detection table row: a model kind against one attacked set.
struct DetectionRow {
    ml::ModelKind kind = ml::ModelKind::Tree;
    AttackPlacement placement = AttackPlacement::P1_TurnOnset;
    std::size_t n_tested = 0;
    std::size_t n_detected = 0;
};

struct ContextSummary {
    std::size_t n_intersections = 0;
    std::size_t flips = 0;
    std::size_t alerts = 0;
    std::size_t alg1_flags = 0;
    std::size_t alg3_flags = 0;
    std::size_t suppressed = 0;
};

struct ExperimentReport {
    std::string report_json;  // canonical bytes, identical to report.json
    std::string report_text;  // aligned tables, identical to report.txt
    std::vector<CleanEval> clean;
    std::vector<DetectionRow> detection;
    ContextSummary context;
    std::filesystem::path out_dir;
};

/// Runs the full pipeline: generate -> simulate -> train (clean) -> inject
/// -> simulate attacked -> detect -> context check -> report. Deterministic
/// per config+seed; the written report.json is byte-identical across runs.
/// Any stage failure is rethrown as std::runtime_error prefixed with the
/// stage name. Writes into out_dir (created if missing):
///   report.json, report.txt,
///   attacks/{p1,p2}_manifest.json,
///   detections/{p1,p2}_<kind>.jsonl,
///   context/verdicts.jsonl,
///   plots/*.svg (only when emit_plots).
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

}  // namespace todsec
