#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "todsec/ml/common.hpp"

namespace todsec {
class Rng;
}

namespace todsec::ml {

/// Fully-connected classifier over the fixed-size downsampled window vector.
/// Hidden layers use the logistic activation; the last layer is linear and
/// feeds the softmax. Parameters live in one flat vector, layer by layer as
/// [W_1, b_1, W_2, b_2, ...] with W_l sized dims[l+1] x dims[l].
struct MlpModel {
    std::vector<int> layer_dims;  // [input, hidden..., 3]
    Eigen::VectorXd theta;
    Standardizer norm;        // per-channel, applied before downsampling
    int downsample_steps = 20;  // time-grid size the window is pooled onto

    std::size_t layer_count() const { return layer_dims.size() - 1; }
    Eigen::Index param_count() const;
    Eigen::Index layer_offset(std::size_t layer) const;

    Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
    Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
};

/// Hidden-layer widths for the five dense tiers.
std::vector<int> hidden_dims_for(ModelKind kind);

/// Xavier-uniform weights, zero biases, drawn from rng in layer order.
MlpModel make_mlp(int input_dim, ModelKind kind, int downsample_steps, Rng& rng);

/// Logits for one already-normalized, already-flattened input vector.
Eigen::Vector3d mlp_logits(const MlpModel& model, const Eigen::VectorXd& x);

/// Mean cross-entropy over a [B x input] batch; grad (optional) receives
/// d(loss)/d(theta) in the flat layout.
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                const std::vector<int>& labels, Eigen::VectorXd* grad);

}  // namespace todsec::ml
