#include "todsec/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace todsec {

namespace {

int turn_index_checked(ManeuverClass m, const char* side) {
    if (!is_turn_class(m)) {
        throw std::invalid_argument(std::string(side) + " class must be a turn class");
    }
    return turn_class_index(m);
}

/// rate = num/den, or 0 with the zero-division flag raised when den == 0.
double rate(std::size_t num, std::size_t den, bool& zero_division) {
    if (den == 0) {
        zero_division = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void ConfusionMatrix::add(ManeuverClass truth, ManeuverClass predicted) {
    ++counts[static_cast<std::size_t>(turn_index_checked(truth, "truth"))]
            [static_cast<std::size_t>(turn_index_checked(predicted, "prediction"))];
}

std::size_t ConfusionMatrix::at(int truth_idx, int predicted_idx) const {
    if (truth_idx < 0 || truth_idx > 2 || predicted_idx < 0 || predicted_idx > 2) {
        throw std::out_of_range("confusion matrix index out of range");
    }
    return counts[static_cast<std::size_t>(truth_idx)][static_cast<std::size_t>(predicted_idx)];
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
        for (std::size_t c : row) n += c;
    }
    return n;
}

std::size_t ConfusionMatrix::diagonal() const {
    return counts[0][0] + counts[1][1] + counts[2][2];
}

ConfusionMatrix confusion_matrix(const std::vector<ManeuverClass>& predictions,
                                 const std::vector<ManeuverClass>& truths) {
    if (predictions.size() != truths.size()) {
        throw std::invalid_argument("predictions and truths differ in length");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truths.size(); ++i) cm.add(truths[i], predictions[i]);
    return cm;
}

std::array<ClassMetrics, 3> metrics_per_class(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    std::array<ClassMetrics, 3> out;
    for (int c = 0; c < 3; ++c) {
        ClassMetrics& m = out[static_cast<std::size_t>(c)];
        m.tp = cm.at(c, c);
        for (int o = 0; o < 3; ++o) {
            if (o == c) continue;
            m.fn += cm.at(c, o);  // truth c predicted elsewhere
            m.fp += cm.at(o, c);  // predicted c, truth elsewhere
        }
        m.tn = total - m.tp - m.fp - m.fn;

        m.accuracy = rate(m.tp + m.tn, total, m.zero_division);
        m.precision = rate(m.tp, m.tp + m.fp, m.zero_division);
        m.recall = rate(m.tp, m.tp + m.fn, m.zero_division);
        if (m.precision + m.recall > 0.0) {
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        } else {
            m.zero_division = true;
        }
    }
    return out;
}

double macro_f1(const ConfusionMatrix& cm) {
    const auto per_class = metrics_per_class(cm);
    return (per_class[0].f1 + per_class[1].f1 + per_class[2].f1) / 3.0;
}

std::string format_metrics_table(const ConfusionMatrix& cm, const std::string& title) {
    const auto per_class = metrics_per_class(cm);
    std::ostringstream out;
    out << title << "\n";
    out << "class  accuracy  precision  recall  f1-score\n";
    for (int c = 0; c < 3; ++c) {
        const ClassMetrics& m = per_class[static_cast<std::size_t>(c)];
        char row[96];
        std::snprintf(row, sizeof row, "%-5s  %8.4f  %9.4f  %6.4f  %8.4f%s\n",
                      to_string(turn_class_from_index(c)).c_str(), m.accuracy, m.precision,
                      m.recall, m.f1, m.zero_division ? "  (zero-division)" : "");
        out << row;
    }
    char foot[64];
    std::snprintf(foot, sizeof foot, "macro-F1 %.4f over %zu samples\n", macro_f1(cm), cm.total());
    out << foot;
    return out.str();
}

}  // namespace todsec
