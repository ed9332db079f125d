#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "todsec/types.hpp"

namespace todsec {

/// 3x3 contingency table over the turn classes. Rows index the true class,
/// columns the predicted class, both in the fixed order lt, rt, ut.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 3>, 3> counts{};

    void add(ManeuverClass truth, ManeuverClass predicted);
    std::size_t at(int truth_idx, int predicted_idx) const;
    std::size_t total() const;
    std::size_t diagonal() const;
};

/// Tallies prediction/truth pairs. Throws std::invalid_argument on length
/// mismatch or a non-turn class on either side.
ConfusionMatrix confusion_matrix(const std::vector<ManeuverClass>& predictions,
                                 const std::vector<ManeuverClass>& truths);

/// One-vs-rest tallies and rates for a single class. Every rate whose
/// denominator was zero is reported as 0.0 and recorded in zero_division.
struct ClassMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    double accuracy = 0.0;   // (tp + tn) / total
    double precision = 0.0;  // tp / (tp + fp)
    double recall = 0.0;     // tp / (tp + fn)
    double f1 = 0.0;         // 2PR / (P + R)
    bool zero_division = false;
};

/// Per-class one-vs-rest metrics in class order lt, rt, ut.
std::array<ClassMetrics, 3> metrics_per_class(const ConfusionMatrix& cm);

/// Mean F1 across the three classes.
double macro_f1(const ConfusionMatrix& cm);

/// Aligned plain-text table (header + one row per class), for reports.
std::string format_metrics_table(const ConfusionMatrix& cm, const std::string& title);

}  // namespace todsec
