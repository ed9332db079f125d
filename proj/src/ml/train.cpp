#include "todsec/ml/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "todsec/rng.hpp"

namespace todsec::ml {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int label_index(const SequenceSample& s) {
    if (!is_turn_class(s.label)) {
        throw std::invalid_argument("sample '" + s.trace_id +
                                    "' is not labeled with a turn maneuver");
    }
    return turn_class_index(s.label);
}

void check_samples(const std::vector<SequenceSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("no training samples");
    bool seen[3] = {false, false, false};
    const Eigen::Index f = samples.front().channels();
    for (const SequenceSample& s : samples) {
        if (s.steps() == 0) throw std::invalid_argument("sample '" + s.trace_id + "' is empty");
        if (s.channels() != f) {
            throw std::invalid_argument("inconsistent channel count across samples");
        }
        seen[label_index(s)] = true;
    }
    if (static_cast<int>(seen[0]) + seen[1] + seen[2] < 2) {
        throw std::invalid_argument("training data must span at least two classes");
    }
}

/// Mini-batch gradient descent with early stopping; generic over the model
/// via the two loss closures. train_loss scores a batch of training indices
/// and fills the gradient; val_loss scores the validation split.
std::vector<EpochLog> run_gd(
    Eigen::VectorXd& theta, std::size_t n_train, const TrainConfig& cfg, Rng rng,
    const std::function<double(const std::vector<std::size_t>&, Eigen::VectorXd*)>& train_loss,
    const std::function<double()>& val_loss) {
    std::vector<EpochLog> history;
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    Eigen::VectorXd best_theta = theta;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;

    Eigen::VectorXd grad(theta.size());
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_train;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(n_train, start + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
            const double loss = train_loss(batch, &grad);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch));
            }
            const double norm = grad.norm();
            if (norm > cfg.grad_clip_norm) grad *= cfg.grad_clip_norm / norm;
            theta -= cfg.learning_rate * grad;
            epoch_loss += loss * static_cast<double>(batch.size());
        }
        epoch_loss /= static_cast<double>(n_train);

        const double val = val_loss();
        if (!std::isfinite(val)) {
            throw std::runtime_error("training diverged: non-finite validation loss at epoch " +
                                     std::to_string(epoch));
        }
        history.push_back({epoch, epoch_loss, val});
        if (val < best_val - 1e-12) {
            best_val = val;
            best_theta = theta;
            epochs_since_best = 0;
        } else if (++epochs_since_best > cfg.patience) {
            break;
        }
    }
    if (std::isfinite(best_val)) theta = best_theta;
    return history;
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(cfg.grad_clip_norm > 0.0)) {
        throw std::invalid_argument("grad_clip_norm must be positive");
    }
    if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
        throw std::invalid_argument("validation_fraction must lie in [0, 1)");
    }
    if (cfg.patience < 0) throw std::invalid_argument("patience must be non-negative");
    if (cfg.lstm_hidden < 1) throw std::invalid_argument("lstm_hidden must be at least 1");
    if (cfg.lstm_readout_steps < 1) {
        throw std::invalid_argument("lstm_readout_steps must be at least 1");
    }
    if (cfg.downsample_steps < 1) throw std::invalid_argument("downsample_steps must be at least 1");
    if (cfg.tree_max_depth < 0) throw std::invalid_argument("tree_max_depth must be non-negative");
    if (cfg.tree_min_leaf < 1) throw std::invalid_argument("tree_min_leaf must be at least 1");
}

std::string config_digest(ModelKind kind, const TrainConfig& cfg) {
    const std::string text =
        "kind=" + to_string(kind) + ";epochs=" + std::to_string(cfg.max_epochs) +
        ";batch=" + std::to_string(cfg.batch_size) + ";lr=" + fmt(cfg.learning_rate) +
        ";clip=" + fmt(cfg.grad_clip_norm) + ";val=" + fmt(cfg.validation_fraction) +
        ";patience=" + std::to_string(cfg.patience) + ";hidden=" +
        std::to_string(cfg.lstm_hidden) + ";readout=" + std::to_string(cfg.lstm_readout_steps) +
        ";down=" + std::to_string(cfg.downsample_steps) + ";depth=" +
        std::to_string(cfg.tree_max_depth) + ";leaf=" + std::to_string(cfg.tree_min_leaf) +
        ";seed=" + std::to_string(cfg.seed);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<SequenceSample>& samples, double held_out_fraction, std::uint64_t seed) {
    if (!(held_out_fraction >= 0.0 && held_out_fraction < 1.0)) {
        throw std::invalid_argument("held-out fraction must lie in [0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        by_class[static_cast<std::size_t>(label_index(samples[i]))].push_back(i);
    }

    Rng rng(seed);
    std::vector<std::size_t> train_ids, held_ids;
    for (int c = 0; c < 3; ++c) {
        auto& ids = by_class[static_cast<std::size_t>(c)];
        if (ids.empty()) continue;
        rng.fork("class-" + std::to_string(c)).shuffle(ids);
        auto n_held = static_cast<std::size_t>(
            std::llround(held_out_fraction * static_cast<double>(ids.size())));
        if (held_out_fraction > 0.0 && n_held == 0 && ids.size() >= 2) n_held = 1;
        if (n_held >= ids.size()) n_held = ids.size() - 1;  // keep at least one in train
        held_ids.insert(held_ids.end(), ids.begin(), ids.begin() + static_cast<long>(n_held));
        train_ids.insert(train_ids.end(), ids.begin() + static_cast<long>(n_held), ids.end());
    }
    std::sort(train_ids.begin(), train_ids.end());
    std::sort(held_ids.begin(), held_ids.end());
    return {std::move(train_ids), std::move(held_ids)};
}

TrainedModel train(const std::vector<SequenceSample>& samples, ModelKind kind,
                   const TrainConfig& cfg) {
    validate_train_config(cfg);
    check_samples(samples);

    Rng root(cfg.seed);
    auto [train_ids, val_ids] =
        stratified_split(samples, cfg.validation_fraction, root.fork("val-split").seed());
    if (train_ids.empty()) throw std::invalid_argument("no training samples after the split");
    // With a degenerate split, fall back to early-stopping on the train loss.
    if (val_ids.empty()) val_ids = train_ids;

    std::vector<SequenceSample> train_set;
    train_set.reserve(train_ids.size());
    for (std::size_t i : train_ids) train_set.push_back(samples[i]);

    Standardizer norm;
    norm.fit(train_set);

    TrainedModel out;
    out.kind = kind;
    out.digest = config_digest(kind, cfg);

    const auto f_dim = static_cast<int>(samples.front().channels());
    std::vector<int> train_labels(train_ids.size());
    for (std::size_t k = 0; k < train_ids.size(); ++k) {
        train_labels[k] = label_index(samples[train_ids[k]]);
    }

    if (kind == ModelKind::Tree) {
        Eigen::MatrixXd x(train_ids.size(), f_dim * 5);
        for (std::size_t k = 0; k < train_ids.size(); ++k) {
            x.row(static_cast<Eigen::Index>(k)) =
                summary_features(norm.apply(samples[train_ids[k]].features)).transpose();
        }
        out.tree = fit_tree(x, train_labels, cfg.tree_max_depth, cfg.tree_min_leaf);
        out.tree->norm = norm;
        return out;
    }

    if (kind == ModelKind::LSTM) {
        std::vector<Eigen::MatrixXd> train_w(train_ids.size()), val_w(val_ids.size());
        std::vector<int> val_labels(val_ids.size());
        for (std::size_t k = 0; k < train_ids.size(); ++k) {
            train_w[k] = norm.apply(samples[train_ids[k]].features);
        }
        for (std::size_t k = 0; k < val_ids.size(); ++k) {
            val_w[k] = norm.apply(samples[val_ids[k]].features);
            val_labels[k] = label_index(samples[val_ids[k]]);
        }

        Rng init = root.fork("init");
        LstmModel model = make_lstm(f_dim, cfg.lstm_hidden, cfg.lstm_readout_steps, init);
        auto train_loss = [&](const std::vector<std::size_t>& batch, Eigen::VectorXd* grad) {
            std::vector<Eigen::MatrixXd> w(batch.size());
            std::vector<int> y(batch.size());
            for (std::size_t k = 0; k < batch.size(); ++k) {
                w[k] = train_w[batch[k]];
                y[k] = train_labels[batch[k]];
            }
            return lstm_loss(model, w, y, grad);
        };
        auto val_loss = [&]() { return lstm_loss(model, val_w, val_labels, nullptr); };
        out.history =
            run_gd(model.theta, train_ids.size(), cfg, root.fork("epochs"), train_loss, val_loss);
        model.norm = norm;
        out.lstm = std::move(model);
        return out;
    }

    // Dense tiers share the downsampled-window representation.
    const int in_dim = cfg.downsample_steps * f_dim;
    Eigen::MatrixXd train_x(train_ids.size(), in_dim);
    Eigen::MatrixXd val_x(val_ids.size(), in_dim);
    std::vector<int> val_labels(val_ids.size());
    for (std::size_t k = 0; k < train_ids.size(); ++k) {
        train_x.row(static_cast<Eigen::Index>(k)) =
            downsample_flatten(norm.apply(samples[train_ids[k]].features), cfg.downsample_steps)
                .transpose();
    }
    for (std::size_t k = 0; k < val_ids.size(); ++k) {
        val_x.row(static_cast<Eigen::Index>(k)) =
            downsample_flatten(norm.apply(samples[val_ids[k]].features), cfg.downsample_steps)
                .transpose();
        val_labels[k] = label_index(samples[val_ids[k]]);
    }

    Rng init = root.fork("init");
    MlpModel model = make_mlp(in_dim, kind, cfg.downsample_steps, init);
    auto train_loss = [&](const std::vector<std::size_t>& batch, Eigen::VectorXd* grad) {
        Eigen::MatrixXd x(batch.size(), in_dim);
        std::vector<int> y(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            x.row(static_cast<Eigen::Index>(k)) = train_x.row(static_cast<Eigen::Index>(batch[k]));
            y[k] = train_labels[batch[k]];
        }
        return mlp_loss(model, x, y, grad);
    };
    auto val_loss = [&]() { return mlp_loss(model, val_x, val_labels, nullptr); };
    out.history =
        run_gd(model.theta, train_ids.size(), cfg, root.fork("epochs"), train_loss, val_loss);
    model.norm = norm;
    out.mlp = std::move(model);
    return out;
}

ClassScores TrainedModel::predict_scores(const SequenceSample& sample) const {
    switch (kind) {
        case ModelKind::Tree:
            return tree_scores(*tree, summary_features(tree->norm.apply(sample.features)));
        case ModelKind::LSTM:
            return lstm_forward(*lstm, lstm->norm.apply(sample.features)).scores;
        default:
            return softmax(mlp_logits(
                *mlp, downsample_flatten(mlp->norm.apply(sample.features), mlp->downsample_steps)));
    }
}

double finite_difference_check(ModelKind kind, const std::vector<SequenceSample>& batch,
                               const TrainConfig& cfg, double epsilon) {
    validate_train_config(cfg);
    check_samples(batch);
    if (kind == ModelKind::Tree) {
        throw std::invalid_argument("the tree has no gradients to check");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");

    Standardizer norm;
    norm.fit(batch);
    std::vector<int> labels(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) labels[k] = label_index(batch[k]);

    Rng init = Rng(cfg.seed).fork("init");
    const auto f_dim = static_cast<int>(batch.front().channels());

    Eigen::VectorXd* theta = nullptr;
    std::function<double(Eigen::VectorXd*)> loss;

    LstmModel lstm_model;
    MlpModel mlp_model;
    std::vector<Eigen::MatrixXd> windows;
    Eigen::MatrixXd inputs;
    if (kind == ModelKind::LSTM) {
        lstm_model = make_lstm(f_dim, cfg.lstm_hidden, cfg.lstm_readout_steps, init);
        windows.resize(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            windows[k] = norm.apply(batch[k].features);
        }
        theta = &lstm_model.theta;
        loss = [&](Eigen::VectorXd* g) { return lstm_loss(lstm_model, windows, labels, g); };
    } else {
        const int in_dim = cfg.downsample_steps * f_dim;
        mlp_model = make_mlp(in_dim, kind, cfg.downsample_steps, init);
        inputs.resize(batch.size(), in_dim);
        for (std::size_t k = 0; k < batch.size(); ++k) {
            inputs.row(static_cast<Eigen::Index>(k)) =
                downsample_flatten(norm.apply(batch[k].features), cfg.downsample_steps)
                    .transpose();
        }
        theta = &mlp_model.theta;
        loss = [&](Eigen::VectorXd* g) { return mlp_loss(mlp_model, inputs, labels, g); };
    }

    Eigen::VectorXd analytic(theta->size());
    loss(&analytic);

    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta->size(); ++i) {
        const double saved = (*theta)[i];
        (*theta)[i] = saved + epsilon;
        const double hi = loss(nullptr);
        (*theta)[i] = saved - epsilon;
        const double lo = loss(nullptr);
        (*theta)[i] = saved;
        const double numeric = (hi - lo) / (2.0 * epsilon);
        const double rel = std::abs(analytic[i] - numeric) /
                           std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-3);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace todsec::ml
