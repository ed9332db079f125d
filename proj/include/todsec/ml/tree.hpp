#pragma once

#include <Eigen/Dense>
#include <vector>

#include "todsec/ml/common.hpp"

namespace todsec::ml {

/// One node of the classification tree. Internal nodes route
/// x[feature] <= threshold to `left`, the rest to `right`; leaves answer with
/// the class frequencies of the training samples they absorbed.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Eigen::Vector3d counts = Eigen::Vector3d::Zero();  // per-class training mass

    bool is_leaf() const { return feature < 0; }
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    Standardizer norm;            // applied before the summary statistics
    int max_depth = 12;
    int min_leaf = 1;
};

/// Greedy impurity-minimizing construction over a [B x F] feature matrix.
/// Candidate thresholds sit halfway between consecutive distinct values of a
/// feature; ties prefer the lowest feature index, then the lowest threshold.
/// A node stops splitting when it is pure, at max_depth, or when no split
/// lowers the weighted Gini impurity.
TreeModel fit_tree(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                   int max_depth, int min_leaf);

/// Leaf class frequencies for one feature vector.
ClassScores tree_scores(const TreeModel& model, const Eigen::VectorXd& x);

}  // namespace todsec::ml
