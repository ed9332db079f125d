#pragma once

#include <Eigen/Dense>
#include <vector>

#include "todsec/ml/common.hpp"

namespace todsec {
class Rng;
}

namespace todsec::ml {

/// Single-layer LSTM classifier head. All parameters live in one flat vector
/// so the optimizer, gradient clipping, and numerical checks can treat the
/// model as a point in R^n; the typed views below expose the usual blocks.
///
/// Gate layout stacks input, forget, cell and output blocks row-wise:
///   z_t = w_x * x_t + w_h * h_{t-1} + b          (4H)
///   i = sigmoid(z[0:H])      f = sigmoid(z[H:2H])
///   g = tanh(z[2H:3H])       o = sigmoid(z[3H:4H])
///   c_t = f .* c_{t-1} + i .* g
///   h_t = o .* tanh(c_t)
/// with h_0 = c_0 = 0. The class logits are a linear head over the mean of
/// h_t across the last min(readout_steps, T) steps.
struct LstmModel {
    int input_dim = 0;
    int hidden = 64;
    int readout_steps = 5;
    Eigen::VectorXd theta;
    Standardizer norm;  // applied to windows before the recurrence

    Eigen::Index param_count() const {
        const Eigen::Index h = hidden, f = input_dim;
        return 4 * h * f + 4 * h * h + 4 * h + 3 * h + 3;
    }

    Eigen::Map<const Eigen::MatrixXd> w_x() const {
        return {theta.data(), 4 * hidden, input_dim};
    }
    Eigen::Map<const Eigen::MatrixXd> w_h() const {
        return {theta.data() + 4 * hidden * input_dim, 4 * hidden, hidden};
    }
    Eigen::Map<const Eigen::VectorXd> b() const {
        return {theta.data() + 4 * hidden * (input_dim + hidden), 4 * hidden};
    }
    Eigen::Map<const Eigen::MatrixXd> w_head() const {
        return {theta.data() + 4 * hidden * (input_dim + hidden + 1), 3, hidden};
    }
    Eigen::Map<const Eigen::VectorXd> b_head() const {
        return {theta.data() + 4 * hidden * (input_dim + hidden + 1) + 3 * hidden, 3};
    }

    Eigen::Map<Eigen::MatrixXd> w_x() { return {theta.data(), 4 * hidden, input_dim}; }
    Eigen::Map<Eigen::MatrixXd> w_h() {
        return {theta.data() + 4 * hidden * input_dim, 4 * hidden, hidden};
    }
    Eigen::Map<Eigen::VectorXd> b() {
        return {theta.data() + 4 * hidden * (input_dim + hidden), 4 * hidden};
    }
    Eigen::Map<Eigen::MatrixXd> w_head() {
        return {theta.data() + 4 * hidden * (input_dim + hidden + 1), 3, hidden};
    }
    Eigen::Map<Eigen::VectorXd> b_head() {
        return {theta.data() + 4 * hidden * (input_dim + hidden + 1) + 3 * hidden, 3};
    }
};

/// Xavier-uniform weights drawn from rng in a fixed order; biases zero except
/// the forget-gate block, which starts at one.
LstmModel make_lstm(int input_dim, int hidden, int readout_steps, Rng& rng);

/// Forward pass over one already-normalized [T x F] window.
struct LstmTraceResult {
    Eigen::MatrixXd h;  // T x H hidden states
    Eigen::Vector3d logits;
    ClassScores scores;
};

/// Throws std::invalid_argument on a channel-count mismatch or empty window,
/// std::runtime_error if the recurrence produces a non-finite value.
LstmTraceResult lstm_forward(const LstmModel& model, const Eigen::MatrixXd& features);

/// Mean cross-entropy over a batch of already-normalized variable-length
/// windows. When grad is non-null it receives d(loss)/d(theta) in the flat
/// layout. labels hold class indices 0..2.
double lstm_loss(const LstmModel& model, const std::vector<Eigen::MatrixXd>& windows,
                 const std::vector<int>& labels, Eigen::VectorXd* grad);

}  // namespace todsec::ml
