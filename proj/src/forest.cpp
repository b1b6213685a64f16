#include "cpids/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpids/errors.hpp"

namespace cpids {

namespace {

double gini(const std::array<std::int64_t, kNumClasses>& counts, std::int64_t total) {
    double g = 1.0;
    for (std::int64_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();
};

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const std::vector<EventLabel>& y;
    std::size_t mtry;
    Rng& rng;
    DecisionTree tree;
    std::vector<std::size_t> feature_pool;
    std::vector<std::pair<double, EventLabel>> scratch;

    TreeBuilder(const Eigen::MatrixXd& X_, const std::vector<EventLabel>& y_, std::size_t mtry_, Rng& rng_)
        : X(X_), y(y_), mtry(mtry_), rng(rng_) {
        feature_pool.resize(static_cast<std::size_t>(X.cols()));
        for (std::size_t f = 0; f < feature_pool.size(); ++f) feature_pool[f] = f;
    }

    int build(std::vector<std::size_t>& samples) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::array<std::int64_t, kNumClasses> counts{};
        for (std::size_t i : samples) ++counts[static_cast<std::size_t>(y[i])];
        {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
            for (std::size_t c = 0; c < kNumClasses; ++c)
                node.class_counts[c] = static_cast<std::int32_t>(counts[c]);
            std::size_t best = 0;
            for (std::size_t c = 1; c < kNumClasses; ++c)
                if (counts[c] > counts[best]) best = c;
            node.label = static_cast<EventLabel>(best);
        }

        std::size_t present = 0;
        for (std::int64_t c : counts)
            if (c > 0) ++present;
        if (present <= 1 || samples.size() < 2) return node_id; // pure leaf

        // feature subsample without replacement (partial Fisher-Yates)
        const std::size_t take = std::min(mtry, feature_pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng.next_index(feature_pool.size() - i);
            std::swap(feature_pool[i], feature_pool[j]);
        }

        SplitChoice choice;
        const std::int64_t n = static_cast<std::int64_t>(samples.size());
        for (std::size_t fi = 0; fi < take; ++fi) {
            const std::size_t f = feature_pool[fi];
            scratch.clear();
            for (std::size_t i : samples)
                scratch.emplace_back(X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)), y[i]);
            std::sort(scratch.begin(), scratch.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (scratch.front().first == scratch.back().first) continue; // constant here
            std::array<std::int64_t, kNumClasses> left{};
            std::int64_t n_left = 0;
            for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
                ++left[static_cast<std::size_t>(scratch[i].second)];
                ++n_left;
                if (scratch[i + 1].first <= scratch[i].first) continue;
                std::array<std::int64_t, kNumClasses> right{};
                for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = counts[c] - left[c];
                const std::int64_t n_right = n - n_left;
                const double score = (static_cast<double>(n_left) * gini(left, n_left) +
                                      static_cast<double>(n_right) * gini(right, n_right)) /
                                     static_cast<double>(n);
                if (score < choice.score) {
                    choice.found = true;
                    choice.feature = static_cast<int>(f);
                    choice.threshold = scratch[i].first + (scratch[i + 1].first - scratch[i].first) / 2.0;
                    choice.score = score;
                }
            }
        }
        if (!choice.found) return node_id; // impure but unsplittable

        std::vector<std::size_t> left_samples, right_samples;
        for (std::size_t i : samples) {
            if (X(static_cast<Eigen::Index>(i), choice.feature) <= choice.threshold)
                left_samples.push_back(i);
            else
                right_samples.push_back(i);
        }
        if (left_samples.empty() || right_samples.empty()) return node_id;

        samples.clear();
        samples.shrink_to_fit();
        const int left_id = build(left_samples);
        const int right_id = build(right_samples);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
        node.feature = choice.feature;
        node.threshold = choice.threshold;
        node.left = left_id;
        node.right = right_id;
        return node_id;
    }
};

} // namespace

RandomForest train_forest(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                          const ForestSpec& spec, Rng& rng) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        raise(errc::length_mismatch,
              "forest: " + std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
    if (y.empty()) raise(errc::length_mismatch, "forest: no training rows");
    if (spec.n_estimators == 0) raise(errc::invalid_config, "forest needs at least one tree");
    std::size_t mtry = spec.n_max_features;
    if (mtry == 0)
        mtry = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
    mtry = std::min(mtry, static_cast<std::size_t>(X.cols()));

    RandomForest forest;
    forest.spec = spec;
    forest.spec.n_max_features = mtry;
    forest.n_features = X.cols();
    forest.trees.reserve(spec.n_estimators);
    const std::size_t n = y.size();
    for (std::size_t t = 0; t < spec.n_estimators; ++t) {
        Rng tree_rng = rng.fork(t);
        std::vector<std::size_t> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i) bootstrap[i] = tree_rng.next_index(n);
        std::sort(bootstrap.begin(), bootstrap.end());
        TreeBuilder builder(X, y, mtry, tree_rng);
        builder.build(bootstrap);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

EventLabel tree_predict(const DecisionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
        node = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[static_cast<std::size_t>(node)].label;
}

Eigen::MatrixXd forest_scores(const RandomForest& forest, const Eigen::MatrixXd& rows) {
    if (rows.cols() != forest.n_features)
        raise(errc::dimension_mismatch, "forest trained on " + std::to_string(forest.n_features) +
                                            " columns, got " + std::to_string(rows.cols()));
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(rows.rows(), static_cast<Eigen::Index>(kNumClasses));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (const auto& tree : forest.trees)
            scores(r, static_cast<Eigen::Index>(tree_predict(tree, rows.row(r)))) += 1.0;
        scores.row(r) /= static_cast<double>(forest.trees.size());
    }
    return scores;
}

std::vector<EventLabel> forest_predict(const RandomForest& forest, const Eigen::MatrixXd& rows) {
    const Eigen::MatrixXd scores = forest_scores(forest, rows);
    std::vector<EventLabel> out;
    out.reserve(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < kNumClasses; ++c)
            if (scores(r, static_cast<Eigen::Index>(c)) > scores(r, static_cast<Eigen::Index>(best))) best = c;
        out.push_back(static_cast<EventLabel>(best));
    }
    return out;
}

} // namespace cpids
