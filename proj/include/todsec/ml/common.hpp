#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "todsec/types.hpp"
#include "todsec/vehicle.hpp"

namespace todsec::ml {

/// One classifier input: a [T x F] window of per-step features.
struct SequenceSample {
    Eigen::MatrixXd features;  // rows = timesteps, cols = channels
    ManeuverClass label = ManeuverClass::Straight;
    std::string trace_id;

    Eigen::Index steps() const { return features.rows(); }
    Eigen::Index channels() const { return features.cols(); }
};

enum class ModelKind { Tree, NarrowNN, MediumNN, WideNN, BiLayeredNN, TriLayeredNN, LSTM };

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::Tree,        ModelKind::NarrowNN,    ModelKind::MediumNN, ModelKind::WideNN,
    ModelKind::BiLayeredNN, ModelKind::TriLayeredNN, ModelKind::LSTM};

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Probabilities over {LeftTurn, RightTurn, UTurn}, in that order.
struct ClassScores {
    Eigen::Vector3d p = Eigen::Vector3d::Constant(1.0 / 3.0);

    /// log with the probability floored at 1e-300, so comparisons never see
    /// -inf yet no realistic decision changes.
    double log_p(int class_index) const;
    int argmax() const;
};

/// Max-subtracted exponential normalization. Throws on non-finite logits.
ClassScores softmax(const Eigen::Vector3d& logits);

/// How classifier windows are cut out of a trace. padding_s = infinity
/// selects the whole sequence.
struct WindowConfig {
    double threshold_deg = 10.0;
    double persistence_s = 0.5;
    double padding_s = 2.0;

    static WindowConfig full() {
        return {10.0, 0.5, std::numeric_limits<double>::infinity()};
    }
    bool is_full() const { return std::isinf(padding_s); }
};

/// Raw-command window: channels [swa_deg, app_pct, bp]. Crops to the
/// above-threshold steering region padded by padding_s per side (clipped to
/// the trace). Throws when the trace holds no maneuver. The trace label, when
/// present, is carried onto the sample.
SequenceSample extract_maneuver_window(const ToDInputTrace& trace, const WindowConfig& cfg);

/// Physical-sensor window: channels [i_batt, p_batt, t_m.., w_m.., wa, roll,
/// pitch, yaw, ax, ay, az]. The steering region is located on the road-wheel
/// angle scaled back through the steering ratio.
SequenceSample extract_maneuver_window(const PhysicalParameterTrace& trace,
                                       const WindowConfig& cfg);

/// Per-channel affine normalizer fitted on training windows. Channels with
/// zero spread divide by 1 instead.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    void fit(const std::vector<SequenceSample>& samples);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
    Eigen::Index channels() const { return mean.size(); }
};

/// Mean-pools a [T x F] window onto a fixed [steps x F] grid and flattens it
/// row-major; the fixed-size vector feeds the dense networks.
Eigen::VectorXd downsample_flatten(const Eigen::MatrixXd& features, int steps);

/// Five order statistics per channel (mean, min, max, integral with dt = 1,
/// relative position of the absolute peak), concatenated channel-major; the
/// decision tree splits on these.
Eigen::VectorXd summary_features(const Eigen::MatrixXd& features);

}  // namespace todsec::ml
