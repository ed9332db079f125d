#include "todsec/ml/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace todsec::ml {

namespace {

double gini(const Eigen::Vector3d& counts) {
    const double n = counts.sum();
    if (n == 0.0) return 0.0;
    return 1.0 - (counts / n).squaredNorm();
}

struct BestSplit {
    bool found = false;
    int feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child Gini
};

BestSplit find_split(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                     const std::vector<int>& rows, int min_leaf) {
    const auto n = static_cast<double>(rows.size());
    BestSplit best;

    std::vector<std::pair<double, int>> order(rows.size());  // (value, label)
    for (Eigen::Index f = 0; f < inputs.cols(); ++f) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            order[k] = {inputs(rows[k], f), labels[static_cast<std::size_t>(rows[k])]};
        }
        std::sort(order.begin(), order.end());

        Eigen::Vector3d left = Eigen::Vector3d::Zero();
        Eigen::Vector3d right = Eigen::Vector3d::Zero();
        for (const auto& [value, label] : order) right[label] += 1.0;

        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            left[order[k].second] += 1.0;
            right[order[k].second] -= 1.0;
            if (order[k].first == order[k + 1].first) continue;  // same value: no boundary
            const auto n_left = static_cast<double>(k + 1);
            const double n_right = n - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;
            const double impurity = (n_left * gini(left) + n_right * gini(right)) / n;
            if (!best.found || impurity < best.impurity - 1e-12) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (order[k].first + order[k + 1].first);
                best.impurity = impurity;
            }
        }
    }
    return best;
}

}  // namespace

TreeModel fit_tree(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                   int max_depth, int min_leaf) {
    if (inputs.rows() == 0) throw std::invalid_argument("cannot fit a tree on no samples");
    if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
        throw std::invalid_argument("labels and inputs differ in length");
    }
    for (int y : labels) {
        if (y < 0 || y > 2) throw std::invalid_argument("label out of range");
    }
    if (max_depth < 0 || min_leaf < 1) {
        throw std::invalid_argument("bad tree growth limits");
    }

    TreeModel model;
    model.max_depth = max_depth;
    model.min_leaf = min_leaf;

    struct Pending {
        int node;
        std::vector<int> rows;
        int depth;
    };
    std::vector<int> all(inputs.rows());
    std::iota(all.begin(), all.end(), 0);
    model.nodes.emplace_back();
    std::vector<Pending> stack{{0, std::move(all), 0}};

    while (!stack.empty()) {
        Pending item = std::move(stack.back());
        stack.pop_back();

        Eigen::Vector3d counts = Eigen::Vector3d::Zero();
        for (int r : item.rows) counts[labels[static_cast<std::size_t>(r)]] += 1.0;
        model.nodes[item.node].counts = counts;

        const double node_gini = gini(counts);
        if (node_gini == 0.0 || item.depth >= max_depth) continue;  // stays a leaf

        const BestSplit split = find_split(inputs, labels, item.rows, min_leaf);
        if (!split.found || split.impurity >= node_gini - 1e-12) continue;

        std::vector<int> left_rows, right_rows;
        for (int r : item.rows) {
            (inputs(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
        }

        const int left_idx = static_cast<int>(model.nodes.size());
        const int right_idx = left_idx + 1;
        {
            TreeNode& node = model.nodes[item.node];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = left_idx;
            node.right = right_idx;
        }
        model.nodes.emplace_back();  // may reallocate; node reference is dead now
        model.nodes.emplace_back();
        // Push right first so the left child is processed (and numbered) in
        // depth-first order, keeping construction deterministic.
        stack.push_back({right_idx, std::move(right_rows), item.depth + 1});
        stack.push_back({left_idx, std::move(left_rows), item.depth + 1});
    }
    return model;
}

ClassScores tree_scores(const TreeModel& model, const Eigen::VectorXd& x) {
    if (model.nodes.empty()) throw std::invalid_argument("empty tree");
    int idx = 0;
    while (!model.nodes[static_cast<std::size_t>(idx)].is_leaf()) {
        const TreeNode& node = model.nodes[static_cast<std::size_t>(idx)];
        if (node.feature >= x.size()) {
            throw std::invalid_argument("input has fewer features than the tree expects");
        }
        idx = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    const TreeNode& leaf = model.nodes[static_cast<std::size_t>(idx)];
    ClassScores s;
    s.p = leaf.counts / leaf.counts.sum();
    return s;
}

}  // namespace todsec::ml
