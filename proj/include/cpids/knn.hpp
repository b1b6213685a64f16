#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

enum class KnnMetric { Manhattan, Euclidean };
enum class KnnWeighting { Uniform, Distance };

KnnMetric parse_knn_metric(const std::string& name);
const char* knn_metric_name(KnnMetric m);
KnnWeighting parse_knn_weighting(const std::string& name);
const char* knn_weighting_name(KnnWeighting w);

struct KnnSpec {
    std::size_t n_neighbors = 5;
    KnnMetric metric = KnnMetric::Manhattan;
    KnnWeighting weighting = KnnWeighting::Uniform;
};

struct KnnModel {
    KnnSpec spec;
    Eigen::MatrixXd X; // reference set
    std::vector<EventLabel> y;
};

KnnModel train_knn(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y, const KnnSpec& spec);

// Vote shares per class; weighted by 1/d (d floored at 1e-12) under distance
// weighting. Prediction is the score argmax, ties to the lowest class index.
Eigen::MatrixXd knn_scores(const KnnModel& model, const Eigen::MatrixXd& rows);
std::vector<EventLabel> knn_predict(const KnnModel& model, const Eigen::MatrixXd& rows);

} // namespace cpids
