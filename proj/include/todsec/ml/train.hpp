#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "todsec/ml/common.hpp"
#include "todsec/ml/lstm.hpp"
#include "todsec/ml/mlp.hpp"
#include "todsec/ml/tree.hpp"

namespace todsec::ml {

/// Hyperparameters shared by every model kind; the per-kind fields are
/// ignored by the others. One config + one seed fully determine a fit.
struct TrainConfig {
    int max_epochs = 300;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double grad_clip_norm = 5.0;        // global L2 clip per update
    double validation_fraction = 0.15;  // carved out of the training data
    int patience = 25;                  // epochs without validation improvement
    int lstm_hidden = 64;
    int lstm_readout_steps = 5;
    int downsample_steps = 20;  // time grid for the dense tiers
    int tree_max_depth = 12;
    int tree_min_leaf = 1;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument naming the first bad field.
void validate_train_config(const TrainConfig& cfg);

/// Stable hex digest of (kind, config); stored with trained models so a
/// loaded file can be matched to the recipe that produced it.
std::string config_digest(ModelKind kind, const TrainConfig& cfg);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

/// A fitted classifier: exactly one of the engines is engaged. The history
/// holds per-epoch losses for the gradient-trained kinds and is empty for
/// the tree.
struct TrainedModel {
    ModelKind kind = ModelKind::Tree;
    std::string digest;
    std::vector<EpochLog> history;
    std::optional<TreeModel> tree;
    std::optional<MlpModel> mlp;
    std::optional<LstmModel> lstm;

    /// Normalizes the window with the stored training statistics and scores
    /// it. Throws on a channel-count mismatch.
    ClassScores predict_scores(const SequenceSample& sample) const;
};

/// Seeded per-class split; the second index list holds the held-out fraction
/// of each class (rounded, clamped so both sides stay non-empty per class
/// when the class has at least two members). Index lists come back sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<SequenceSample>& samples, double held_out_fraction, std::uint64_t seed);

/// Fits the requested kind with mini-batch gradient descent (cross-entropy,
/// global-norm clipping, early stopping on validation loss) or, for the
/// tree, one greedy construction pass. Bit-identical for identical
/// (samples, kind, cfg). Throws std::invalid_argument when the samples span
/// fewer than two classes or carry non-turn labels, std::runtime_error when
/// the loss leaves the finite range.
TrainedModel train(const std::vector<SequenceSample>& samples, ModelKind kind,
                   const TrainConfig& cfg);

/// Compares analytic gradients against central differences over every
/// parameter of a freshly initialized model of the given kind, on the given
/// batch. Returns the maximum relative disagreement, measured against
/// max(|analytic| + |numeric|, 1e-3). Tree models have no gradients and are
/// rejected.
double finite_difference_check(ModelKind kind, const std::vector<SequenceSample>& batch,
                               const TrainConfig& cfg, double epsilon = 1e-5);

}  // namespace todsec::ml
