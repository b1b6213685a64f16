#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "cpids/rng.hpp"
#include "cpids/types.hpp"

namespace cpids {

struct ForestSpec {
    std::size_t n_estimators = 100;
    std::size_t n_max_features = 0; // 0 = floor(sqrt(columns)), min 1
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    EventLabel label = EventLabel::Normal;                // leaf majority, ties to lowest index
    std::array<std::int32_t, kNumClasses> class_counts{}; // training samples at the node
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

struct RandomForest {
    ForestSpec spec;
    Eigen::Index n_features = 0;
    std::vector<DecisionTree> trees;
};

// Gini-split trees on bootstrap samples, unlimited depth, minimum leaf size 1,
// per-split feature subsample of n_max_features columns.
RandomForest train_forest(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                          const ForestSpec& spec, Rng& rng);

EventLabel tree_predict(const DecisionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Vote shares: the fraction of trees whose leaf votes each class.
Eigen::MatrixXd forest_scores(const RandomForest& forest, const Eigen::MatrixXd& rows);
std::vector<EventLabel> forest_predict(const RandomForest& forest, const Eigen::MatrixXd& rows);

} // namespace cpids
