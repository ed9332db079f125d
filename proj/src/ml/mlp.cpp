#include "todsec/ml/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "todsec/rng.hpp"

namespace todsec::ml {

namespace {

void check_dims(const MlpModel& m) {
    if (m.layer_dims.size() < 2 || m.layer_dims.back() != 3) {
        throw std::invalid_argument("dense model needs [input, ..., 3] layer dims");
    }
}

}  // namespace

Eigen::Index MlpModel::param_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        n += static_cast<Eigen::Index>(layer_dims[l + 1]) * layer_dims[l] + layer_dims[l + 1];
    }
    return n;
}

Eigen::Index MlpModel::layer_offset(std::size_t layer) const {
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        off += static_cast<Eigen::Index>(layer_dims[l + 1]) * layer_dims[l] + layer_dims[l + 1];
    }
    return off;
}

Eigen::Map<const Eigen::MatrixXd> MlpModel::weight(std::size_t layer) const {
    return {theta.data() + layer_offset(layer), layer_dims[layer + 1], layer_dims[layer]};
}

Eigen::Map<const Eigen::VectorXd> MlpModel::bias(std::size_t layer) const {
    return {theta.data() + layer_offset(layer) +
                static_cast<Eigen::Index>(layer_dims[layer + 1]) * layer_dims[layer],
            layer_dims[layer + 1]};
}

Eigen::Map<Eigen::MatrixXd> MlpModel::weight(std::size_t layer) {
    return {theta.data() + layer_offset(layer), layer_dims[layer + 1], layer_dims[layer]};
}

Eigen::Map<Eigen::VectorXd> MlpModel::bias(std::size_t layer) {
    return {theta.data() + layer_offset(layer) +
                static_cast<Eigen::Index>(layer_dims[layer + 1]) * layer_dims[layer],
            layer_dims[layer + 1]};
}

std::vector<int> hidden_dims_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::NarrowNN: return {10};
        case ModelKind::MediumNN: return {25};
        case ModelKind::WideNN: return {100};
        case ModelKind::BiLayeredNN: return {10, 10};
        case ModelKind::TriLayeredNN: return {10, 10, 10};
        default:
            throw std::invalid_argument("'" + to_string(kind) + "' is not a dense network kind");
    }
}

MlpModel make_mlp(int input_dim, ModelKind kind, int downsample_steps, Rng& rng) {
    if (input_dim <= 0) throw std::invalid_argument("input dimension must be positive");
    if (downsample_steps <= 0) throw std::invalid_argument("downsample steps must be positive");

    MlpModel m;
    m.layer_dims.push_back(input_dim);
    for (int h : hidden_dims_for(kind)) m.layer_dims.push_back(h);
    m.layer_dims.push_back(3);
    m.downsample_steps = downsample_steps;
    m.theta = Eigen::VectorXd::Zero(m.param_count());
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        auto w = m.weight(l);
        const double limit = std::sqrt(6.0 / (m.layer_dims[l] + m.layer_dims[l + 1]));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
        }
    }
    return m;
}

Eigen::Vector3d mlp_logits(const MlpModel& model, const Eigen::VectorXd& x) {
    check_dims(model);
    if (x.size() != model.layer_dims.front()) {
        throw std::invalid_argument("input has " + std::to_string(x.size()) +
                                    " values, model expects " +
                                    std::to_string(model.layer_dims.front()));
    }
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        Eigen::VectorXd z = model.weight(l) * a + model.bias(l);
        if (l + 1 == model.layer_count()) return z;
        a = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    }
    throw std::logic_error("unreachable");
}

double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                const std::vector<int>& labels, Eigen::VectorXd* grad) {
    check_dims(model);
    const Eigen::Index batch = inputs.rows();
    if (batch == 0) throw std::invalid_argument("empty batch");
    if (static_cast<Eigen::Index>(labels.size()) != batch) {
        throw std::invalid_argument("labels and inputs differ in length");
    }
    if (inputs.cols() != model.layer_dims.front()) {
        throw std::invalid_argument("input has " + std::to_string(inputs.cols()) +
                                    " values, model expects " +
                                    std::to_string(model.layer_dims.front()));
    }
    for (int y : labels) {
        if (y < 0 || y > 2) throw std::invalid_argument("label out of range");
    }

    const std::size_t n_layers = model.layer_count();
    std::vector<Eigen::MatrixXd> acts(n_layers + 1);  // acts[0] = inputs
    acts[0] = inputs;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = acts[l] * model.weight(l).transpose();
        z.rowwise() += model.bias(l).transpose();
        acts[l + 1] = (l + 1 == n_layers)
                          ? z
                          : (1.0 / (1.0 + (-z.array()).exp())).matrix();
    }

    Eigen::MatrixXd& logits = acts[n_layers];
    if (!logits.allFinite()) throw std::runtime_error("non-finite value in dense forward pass");
    Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::VectorXd lse =
        (logits.colwise() - row_max).array().exp().rowwise().sum().log().matrix() + row_max;
    double loss = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        loss -= logits(b, labels[static_cast<std::size_t>(b)]) - lse[b];
    }
    loss /= static_cast<double>(batch);
    if (grad == nullptr) return loss;

    MlpModel g_model;
    g_model.layer_dims = model.layer_dims;
    g_model.theta = Eigen::VectorXd::Zero(model.param_count());

    Eigen::MatrixXd dz = (logits.colwise() - lse).array().exp();
    for (Eigen::Index b = 0; b < batch; ++b) {
        dz(b, labels[static_cast<std::size_t>(b)]) -= 1.0;
    }
    dz /= static_cast<double>(batch);

    for (std::size_t l = n_layers; l-- > 0;) {
        g_model.weight(l) = dz.transpose() * acts[l];
        g_model.bias(l) = dz.colwise().sum().transpose();
        if (l > 0) {
            const Eigen::MatrixXd da = dz * model.weight(l);
            dz = (da.array() * acts[l].array() * (1.0 - acts[l].array())).matrix();
        }
    }
    *grad = std::move(g_model.theta);
    return loss;
}

}  // namespace todsec::ml
