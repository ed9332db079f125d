#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "todsec/ml/common.hpp"
#include "todsec/ml/train.hpp"
#include "todsec/types.hpp"
#include "todsec/vehicle.hpp"

namespace todsec {

/// Prediction-versus-plan anomaly rule: a trace is flagged when the log
/// probability the classifier assigns to the planned maneuver falls strictly
/// below the best log probability among the other classes (probabilities are
/// floored at 1e-300 first, so a hard zero still compares). Ties leave the
/// trace unflagged. Throws std::invalid_argument when expected is not a turn
/// class.
bool score_anomaly(const ml::ClassScores& scores, ManeuverClass expected);

/// One trace's trip through the physics detector, all stages recorded.
struct DetectionResult {
    std::string trace_id;
    ManeuverClass expected = ManeuverClass::LeftTurn;
    std::size_t window_steps = 0;        // classifier window length
    ml::ClassScores scores;              // class probabilities
    ManeuverClass predicted = ManeuverClass::LeftTurn;  // argmax of scores
    AnomalyVerdict verdict;              // kind = PhysicsScore
};

/// Cuts the classifier window out of the physical trace, scores it with the
/// model, and applies score_anomaly against the planned maneuver (explicit
/// argument, else the trace label). Throws std::invalid_argument when no
/// planned maneuver is available.
DetectionResult detect_trace(const PhysicalParameterTrace& trace, const ml::TrainedModel& model,
                             const ml::WindowConfig& window,
                             std::optional<ManeuverClass> expected = std::nullopt);

struct AttackSetEvaluation {
    std::size_t n_tested = 0;
    std::size_t n_detected = 0;
    std::vector<DetectionResult> results;  // one per trace, input order
};

/// Runs detect_trace over every trace; n_detected counts flagged verdicts,
/// so n_detected <= n_tested by construction.
AttackSetEvaluation evaluate_attack_set(const std::vector<PhysicalParameterTrace>& traces,
                                        const ml::TrainedModel& model,
                                        const ml::WindowConfig& window);

/// Aggregate JSON: totals, the detection rate, and per-expected-class splits.
void write_detection_summary(const AttackSetEvaluation& eval,
                             const std::filesystem::path& path);

/// One JSON object per line, one line per trace.
void write_detection_results(const std::vector<DetectionResult>& results,
                             const std::filesystem::path& path);
std::vector<DetectionResult> parse_detection_results(const std::filesystem::path& path);

}  // namespace todsec
