#include "cpids/knn.hpp"

#include <algorithm>

#include "cpids/errors.hpp"

namespace cpids {

KnnMetric parse_knn_metric(const std::string& name) {
    if (name == "manhattan") return KnnMetric::Manhattan;
    if (name == "euclidean") return KnnMetric::Euclidean;
    raise(errc::invalid_config, "unknown distance metric '" + name + "' (expected manhattan or euclidean)");
}

const char* knn_metric_name(KnnMetric m) {
    return m == KnnMetric::Manhattan ? "manhattan" : "euclidean";
}

KnnWeighting parse_knn_weighting(const std::string& name) {
    if (name == "uniform") return KnnWeighting::Uniform;
    if (name == "distance") return KnnWeighting::Distance;
    raise(errc::invalid_config, "unknown vote weighting '" + name + "' (expected uniform or distance)");
}

const char* knn_weighting_name(KnnWeighting w) {
    return w == KnnWeighting::Uniform ? "uniform" : "distance";
}

KnnModel train_knn(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y, const KnnSpec& spec) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        raise(errc::length_mismatch,
              "knn: " + std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
    if (spec.n_neighbors == 0) raise(errc::invalid_config, "knn needs at least one neighbor");
    if (y.size() < spec.n_neighbors)
        raise(errc::class_too_small, "knn with k=" + std::to_string(spec.n_neighbors) + " needs at least " +
                                         std::to_string(spec.n_neighbors) + " training rows, got " +
                                         std::to_string(y.size()));
    return {spec, X, y};
}

Eigen::MatrixXd knn_scores(const KnnModel& model, const Eigen::MatrixXd& rows) {
    if (rows.cols() != model.X.cols())
        raise(errc::dimension_mismatch, "knn trained on " + std::to_string(model.X.cols()) +
                                            " columns, got " + std::to_string(rows.cols()));
    const std::size_t n_ref = model.y.size();
    const std::size_t k = model.spec.n_neighbors;
    Eigen::MatrixXd scores =
        Eigen::MatrixXd::Zero(rows.rows(), static_cast<Eigen::Index>(kNumClasses));
    std::vector<std::pair<double, std::size_t>> dists(n_ref);
    for (Eigen::Index q = 0; q < rows.rows(); ++q) {
        for (std::size_t r = 0; r < n_ref; ++r) {
            const auto diff = rows.row(q) - model.X.row(static_cast<Eigen::Index>(r));
            const double d = model.spec.metric == KnnMetric::Manhattan ? diff.cwiseAbs().sum() : diff.norm();
            dists[r] = {d, r};
        }
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k), dists.end());
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = model.spec.weighting == KnnWeighting::Uniform
                                 ? 1.0
                                 : 1.0 / std::max(dists[i].first, 1e-12);
            scores(q, static_cast<Eigen::Index>(model.y[dists[i].second])) += w;
            total += w;
        }
        scores.row(q) /= total;
    }
    return scores;
}

std::vector<EventLabel> knn_predict(const KnnModel& model, const Eigen::MatrixXd& rows) {
    const Eigen::MatrixXd scores = knn_scores(model, rows);
    std::vector<EventLabel> out;
    out.reserve(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index q = 0; q < rows.rows(); ++q) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < kNumClasses; ++c)
            if (scores(q, static_cast<Eigen::Index>(c)) > scores(q, static_cast<Eigen::Index>(best))) best = c;
        out.push_back(static_cast<EventLabel>(best));
    }
    return out;
}

} // namespace cpids
