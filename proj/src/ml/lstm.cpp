#include "todsec/ml/lstm.hpp"

#include <cmath>
#include <stdexcept>

#include "todsec/rng.hpp"

namespace todsec::ml {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

void check_window(const LstmModel& model, const Eigen::MatrixXd& w) {
    if (w.rows() == 0) throw std::invalid_argument("empty window");
    if (w.cols() != model.input_dim) {
        throw std::invalid_argument("window has " + std::to_string(w.cols()) +
                                    " channels, model expects " +
                                    std::to_string(model.input_dim));
    }
}

struct StepCache {
    Eigen::ArrayXXd i, f, g, o, c, tanh_c;
    Eigen::MatrixXd h;
};

}  // namespace

LstmModel make_lstm(int input_dim, int hidden, int readout_steps, Rng& rng) {
    if (input_dim <= 0 || hidden <= 0 || readout_steps <= 0) {
        throw std::invalid_argument("LSTM dimensions must be positive");
    }
    LstmModel m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    m.readout_steps = readout_steps;
    m.theta = Eigen::VectorXd::Zero(m.param_count());

    auto fill = [&rng](Eigen::Map<Eigen::MatrixXd> w, double limit) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
        }
    };
    fill(m.w_x(), std::sqrt(6.0 / (input_dim + hidden)));
    fill(m.w_h(), std::sqrt(6.0 / (2.0 * hidden)));
    fill(m.w_head(), std::sqrt(6.0 / (hidden + 3.0)));
    m.b().segment(hidden, hidden).setOnes();  // forget gate starts open
    return m;
}

LstmTraceResult lstm_forward(const LstmModel& model, const Eigen::MatrixXd& features) {
    check_window(model, features);
    const Eigen::Index t_len = features.rows();
    const Eigen::Index h_dim = model.hidden;

    LstmTraceResult out;
    out.h.resize(t_len, h_dim);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(h_dim);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(h_dim);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        const Eigen::VectorXd z =
            model.w_x() * features.row(t).transpose() + model.w_h() * h + model.b();
        const Eigen::ArrayXd i = 1.0 / (1.0 + (-z.segment(0, h_dim).array()).exp());
        const Eigen::ArrayXd f = 1.0 / (1.0 + (-z.segment(h_dim, h_dim).array()).exp());
        const Eigen::ArrayXd g = z.segment(2 * h_dim, h_dim).array().tanh();
        const Eigen::ArrayXd o = 1.0 / (1.0 + (-z.segment(3 * h_dim, h_dim).array()).exp());
        c = (f * c.array() + i * g).matrix();
        h = (o * c.array().tanh()).matrix();
        out.h.row(t) = h.transpose();
    }

    const Eigen::Index r_steps = std::min<Eigen::Index>(model.readout_steps, t_len);
    const Eigen::VectorXd readout =
        out.h.bottomRows(r_steps).colwise().mean().transpose();
    out.logits = model.w_head() * readout + model.b_head();
    if (!out.h.allFinite() || !out.logits.allFinite()) {
        throw std::runtime_error("non-finite value in recurrent forward pass");
    }
    out.scores = softmax(out.logits);
    return out;
}

double lstm_loss(const LstmModel& model, const std::vector<Eigen::MatrixXd>& windows,
                 const std::vector<int>& labels, Eigen::VectorXd* grad) {
    if (windows.empty()) throw std::invalid_argument("empty batch");
    if (labels.size() != windows.size()) {
        throw std::invalid_argument("labels and windows differ in length");
    }
    const auto batch = static_cast<Eigen::Index>(windows.size());
    const Eigen::Index h_dim = model.hidden;
    const Eigen::Index f_dim = model.input_dim;

    std::vector<Eigen::Index> len(windows.size());
    Eigen::Index t_max = 0;
    for (std::size_t b = 0; b < windows.size(); ++b) {
        check_window(model, windows[b]);
        if (labels[b] < 0 || labels[b] > 2) throw std::invalid_argument("label out of range");
        len[b] = windows[b].rows();
        t_max = std::max(t_max, len[b]);
    }

    // ---- forward ----
    std::vector<StepCache> steps(static_cast<std::size_t>(t_max));
    std::vector<Eigen::MatrixXd> xs(static_cast<std::size_t>(t_max));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, h_dim);
    Eigen::MatrixXd c_state = Eigen::MatrixXd::Zero(batch, h_dim);
    Eigen::MatrixXd readout = Eigen::MatrixXd::Zero(batch, h_dim);

    for (Eigen::Index t = 0; t < t_max; ++t) {
        Eigen::MatrixXd x_t = Eigen::MatrixXd::Zero(batch, f_dim);
        for (Eigen::Index b = 0; b < batch; ++b) {
            if (t < len[b]) x_t.row(b) = windows[static_cast<std::size_t>(b)].row(t);
        }

        Eigen::MatrixXd z = x_t * model.w_x().transpose() + h * model.w_h().transpose();
        z.rowwise() += model.b().transpose();

        StepCache& s = steps[static_cast<std::size_t>(t)];
        s.i = sigmoid(z.leftCols(h_dim).array());
        s.f = sigmoid(z.middleCols(h_dim, h_dim).array());
        s.g = z.middleCols(2 * h_dim, h_dim).array().tanh();
        s.o = sigmoid(z.rightCols(h_dim).array());
        Eigen::ArrayXXd c_new = s.f * c_state.array() + s.i * s.g;
        s.tanh_c = c_new.tanh();
        Eigen::MatrixXd h_new = (s.o * s.tanh_c).matrix();

        for (Eigen::Index b = 0; b < batch; ++b) {
            if (t >= len[b]) {  // finished sequence: carry the state unchanged
                c_new.row(b) = c_state.row(b).array();
                h_new.row(b) = h.row(b);
            } else {
                const Eigen::Index r_b = std::min<Eigen::Index>(model.readout_steps, len[b]);
                if (t >= len[b] - r_b) {
                    readout.row(b) += h_new.row(b) / static_cast<double>(r_b);
                }
            }
        }
        s.c = c_new;
        s.h = h_new;
        c_state = c_new.matrix();
        h = h_new;
        xs[static_cast<std::size_t>(t)] = std::move(x_t);
    }

    Eigen::MatrixXd logits = readout * model.w_head().transpose();
    logits.rowwise() += model.b_head().transpose();
    if (!logits.allFinite()) {
        throw std::runtime_error("non-finite value in recurrent forward pass");
    }

    // Stable log-softmax cross-entropy, averaged over the batch.
    Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd shifted = logits.colwise() - row_max;
    Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix() + row_max;
    double loss = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        loss -= logits(b, labels[static_cast<std::size_t>(b)]) - lse[b];
    }
    loss /= static_cast<double>(batch);
    if (grad == nullptr) return loss;

    // ---- backward ----
    LstmModel g_model;  // reuse the flat layout for gradient accumulation
    g_model.input_dim = model.input_dim;
    g_model.hidden = model.hidden;
    g_model.readout_steps = model.readout_steps;
    g_model.theta = Eigen::VectorXd::Zero(model.param_count());

    Eigen::MatrixXd probs = (logits.colwise() - lse).array().exp();
    Eigen::MatrixXd d_logits = probs;
    for (Eigen::Index b = 0; b < batch; ++b) {
        d_logits(b, labels[static_cast<std::size_t>(b)]) -= 1.0;
    }
    d_logits /= static_cast<double>(batch);

    g_model.w_head() = d_logits.transpose() * readout;
    g_model.b_head() = d_logits.colwise().sum().transpose();
    const Eigen::MatrixXd d_readout = d_logits * model.w_head();

    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(batch, h_dim);
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(batch, h_dim);
    Eigen::MatrixXd gw_x = Eigen::MatrixXd::Zero(4 * h_dim, f_dim);
    Eigen::MatrixXd gw_h = Eigen::MatrixXd::Zero(4 * h_dim, h_dim);
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(4 * h_dim);

    for (Eigen::Index t = t_max - 1; t >= 0; --t) {
        const StepCache& s = steps[static_cast<std::size_t>(t)];
        Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(batch, h_dim);
        Eigen::ArrayXXd c_prev = Eigen::ArrayXXd::Zero(batch, h_dim);
        if (t > 0) {
            h_prev = steps[static_cast<std::size_t>(t - 1)].h;
            c_prev = steps[static_cast<std::size_t>(t - 1)].c;
        }

        for (Eigen::Index b = 0; b < batch; ++b) {
            const Eigen::Index r_b = std::min<Eigen::Index>(model.readout_steps, len[b]);
            if (t < len[b] && t >= len[b] - r_b) {
                dh.row(b) += d_readout.row(b) / static_cast<double>(r_b);
            }
        }

        const Eigen::ArrayXXd d_tanh_c = dh.array() * s.o;
        const Eigen::ArrayXXd dc_total = dc.array() + d_tanh_c * (1.0 - s.tanh_c.square());
        const Eigen::ArrayXXd d_o = dh.array() * s.tanh_c;
        const Eigen::ArrayXXd d_i = dc_total * s.g;
        const Eigen::ArrayXXd d_g = dc_total * s.i;
        const Eigen::ArrayXXd d_f = dc_total * c_prev;

        Eigen::MatrixXd dz(batch, 4 * h_dim);
        dz.leftCols(h_dim) = (d_i * s.i * (1.0 - s.i)).matrix();
        dz.middleCols(h_dim, h_dim) = (d_f * s.f * (1.0 - s.f)).matrix();
        dz.middleCols(2 * h_dim, h_dim) = (d_g * (1.0 - s.g.square())).matrix();
        dz.rightCols(h_dim) = (d_o * s.o * (1.0 - s.o)).matrix();
        for (Eigen::Index b = 0; b < batch; ++b) {
            if (t >= len[b]) dz.row(b).setZero();  // padded step: no parameter flow
        }

        gw_x.noalias() += dz.transpose() * xs[static_cast<std::size_t>(t)];
        gw_h.noalias() += dz.transpose() * h_prev;
        gb += dz.colwise().sum().transpose();

        const Eigen::MatrixXd dh_prev = dz * model.w_h();
        for (Eigen::Index b = 0; b < batch; ++b) {
            if (t < len[b]) {  // valid step: state gradients pass through the gates
                dh.row(b) = dh_prev.row(b);
                dc.row(b) = (dc_total.row(b) * s.f.row(b)).matrix();
            }
            // padded step: dh, dc carry to t-1 unchanged
        }
    }

    g_model.w_x() = gw_x;
    g_model.w_h() = gw_h;
    g_model.b() = gb;
    *grad = std::move(g_model.theta);
    return loss;
}

}  // namespace todsec::ml
