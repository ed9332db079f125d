#include "todsec/ml/common.hpp"

#include <cmath>
#include <stdexcept>

#include "todsec/attack.hpp"

namespace todsec::ml {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::size_t padding_samples(double padding_s, double sample_period_s) {
    if (!(padding_s >= 0.0)) throw std::invalid_argument("window padding must be non-negative");
    return static_cast<std::size_t>(std::ceil(padding_s / sample_period_s - 1e-9));
}

struct WindowBounds {
    std::size_t begin;
    std::size_t end;  // inclusive
};

WindowBounds resolve_bounds(const std::vector<double>& swa_deg, double sample_period_s,
                            const WindowConfig& cfg) {
    const std::size_t n = swa_deg.size();
    if (n == 0) throw std::invalid_argument("empty trace");
    if (cfg.is_full()) return {0, n - 1};

    const SwaRegion region =
        locate_turn_region(swa_deg, sample_period_s, cfg.threshold_deg, cfg.persistence_s);
    const std::size_t pad = padding_samples(cfg.padding_s, sample_period_s);
    WindowBounds b;
    b.begin = region.begin > pad ? region.begin - pad : 0;
    b.end = std::min(region.end + pad, n - 1);
    return b;
}

}  // namespace

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Tree: return "tree";
        case ModelKind::NarrowNN: return "narrow_nn";
        case ModelKind::MediumNN: return "medium_nn";
        case ModelKind::WideNN: return "wide_nn";
        case ModelKind::BiLayeredNN: return "bi_layered_nn";
        case ModelKind::TriLayeredNN: return "tri_layered_nn";
        case ModelKind::LSTM: return "lstm";
    }
    throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
    for (ModelKind k : kAllModelKinds) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

double ClassScores::log_p(int class_index) const {
    if (class_index < 0 || class_index >= 3) {
        throw std::out_of_range("class index out of range");
    }
    return std::log(std::max(p[class_index], 1e-300));
}

int ClassScores::argmax() const {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

ClassScores softmax(const Eigen::Vector3d& logits) {
    if (!logits.allFinite()) throw std::invalid_argument("softmax input must be finite");
    const double m = logits.maxCoeff();
    Eigen::Vector3d e = (logits.array() - m).exp();
    ClassScores s;
    s.p = e / e.sum();
    return s;
}

SequenceSample extract_maneuver_window(const ToDInputTrace& trace, const WindowConfig& cfg) {
    std::vector<double> swa(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) swa[i] = trace.samples[i].swa_deg;
    const WindowBounds b = resolve_bounds(swa, trace.sample_period_s, cfg);

    SequenceSample out;
    out.trace_id = trace.trace_id;
    if (trace.label) out.label = *trace.label;
    const auto rows = static_cast<Eigen::Index>(b.end - b.begin + 1);
    out.features.resize(rows, 3);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const CommandSample& s = trace.samples[b.begin + static_cast<std::size_t>(r)];
        out.features(r, 0) = s.swa_deg;
        out.features(r, 1) = s.app_pct;
        out.features(r, 2) = s.bp ? 1.0 : 0.0;
    }
    return out;
}

SequenceSample extract_maneuver_window(const PhysicalParameterTrace& trace,
                                       const WindowConfig& cfg) {
    const std::size_t n = trace.size();
    // The locator thinks in steering-wheel degrees; map the road-wheel angle
    // channel back through the steering ratio.
    std::vector<double> swa(n);
    for (std::size_t i = 0; i < n; ++i) {
        swa[i] = trace.wa_rad[i] * (180.0 / kPi) * trace.steering_ratio;
    }
    const WindowBounds b = resolve_bounds(swa, trace.sample_period_s, cfg);

    SequenceSample out;
    out.trace_id = trace.trace_id;
    if (trace.label) out.label = *trace.label;
    const auto rows = static_cast<Eigen::Index>(b.end - b.begin + 1);
    const auto cols = static_cast<Eigen::Index>(trace.feature_count());
    out.features.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t i = b.begin + static_cast<std::size_t>(r);
        Eigen::Index c = 0;
        out.features(r, c++) = trace.i_batt_a[i];
        out.features(r, c++) = trace.p_batt_w[i];
        for (std::size_t m = 0; m < trace.n_motors; ++m) {
            out.features(r, c++) = trace.motor_torque_nm[m][i];
        }
        for (std::size_t m = 0; m < trace.n_motors; ++m) {
            out.features(r, c++) = trace.motor_speed_rads[m][i];
        }
        out.features(r, c++) = trace.wa_rad[i];
        out.features(r, c++) = trace.roll_rad[i];
        out.features(r, c++) = trace.pitch_rad[i];
        out.features(r, c++) = trace.yaw_rad[i];
        out.features(r, c++) = trace.ax_ms2[i];
        out.features(r, c++) = trace.ay_ms2[i];
        out.features(r, c++) = trace.az_ms2[i];
    }
    return out;
}

void Standardizer::fit(const std::vector<SequenceSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("cannot fit a standardizer on no samples");
    const Eigen::Index f = samples.front().channels();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(f);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(f);
    double count = 0.0;
    for (const SequenceSample& s : samples) {
        if (s.channels() != f) {
            throw std::invalid_argument("inconsistent channel count across samples");
        }
        sum += s.features.colwise().sum().transpose();
        sumsq += s.features.array().square().colwise().sum().matrix().transpose();
        count += static_cast<double>(s.steps());
    }
    if (count == 0.0) throw std::invalid_argument("cannot fit a standardizer on empty windows");
    mean = sum / count;
    Eigen::VectorXd var = (sumsq / count - mean.array().square().matrix()).cwiseMax(0.0);
    stddev = var.cwiseSqrt();
    for (Eigen::Index i = 0; i < stddev.size(); ++i) {
        if (stddev[i] == 0.0) stddev[i] = 1.0;  // constant channel: leave it centered only
    }
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
    if (features.cols() != mean.size()) {
        throw std::invalid_argument("feature matrix has " + std::to_string(features.cols()) +
                                    " channels, normalizer expects " +
                                    std::to_string(mean.size()));
    }
    Eigen::MatrixXd out = features.rowwise() - mean.transpose();
    out.array().rowwise() /= stddev.transpose().array();
    return out;
}

Eigen::VectorXd downsample_flatten(const Eigen::MatrixXd& features, int steps) {
    const Eigen::Index t = features.rows();
    const Eigen::Index f = features.cols();
    if (t == 0) throw std::invalid_argument("cannot downsample an empty window");
    if (steps <= 0) throw std::invalid_argument("downsample step count must be positive");

    Eigen::VectorXd out(static_cast<Eigen::Index>(steps) * f);
    for (int k = 0; k < steps; ++k) {
        Eigen::Index lo = (static_cast<Eigen::Index>(k) * t) / steps;
        Eigen::Index hi = (static_cast<Eigen::Index>(k + 1) * t) / steps;
        if (hi <= lo) hi = lo + 1;  // shorter window than grid: repeat samples
        const Eigen::RowVectorXd m =
            features.middleRows(lo, hi - lo).colwise().mean();
        out.segment(static_cast<Eigen::Index>(k) * f, f) = m.transpose();
    }
    return out;
}

Eigen::VectorXd summary_features(const Eigen::MatrixXd& features) {
    const Eigen::Index t = features.rows();
    const Eigen::Index f = features.cols();
    if (t == 0) throw std::invalid_argument("cannot summarize an empty window");

    Eigen::VectorXd out(f * 5);
    const double denom = t > 1 ? static_cast<double>(t - 1) : 1.0;
    for (Eigen::Index c = 0; c < f; ++c) {
        const auto col = features.col(c);
        Eigen::Index peak = 0;
        col.cwiseAbs().maxCoeff(&peak);
        out[c * 5 + 0] = col.mean();
        out[c * 5 + 1] = col.minCoeff();
        out[c * 5 + 2] = col.maxCoeff();
        out[c * 5 + 3] = col.sum();  // integral in sample units
        out[c * 5 + 4] = static_cast<double>(peak) / denom;
    }
    return out;
}

}  // namespace todsec::ml
