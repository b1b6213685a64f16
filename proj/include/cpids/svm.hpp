#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

struct SvmSpec {
    double C = 1.0;
    double gamma = 0.1;       // RBF kernel coefficient
    double tol = 1e-3;        // maximal-violating-pair stopping tolerance
    std::size_t max_iter = 0; // 0 = automatic cap from problem size
};

// One soft-margin RBF machine of the one-vs-one scheme. The decision value
// sum_i coef_i K(x_i, x) - rho is >= 0 for the positive (lower-index) class.
struct BinarySvm {
    EventLabel positive = EventLabel::Normal;
    EventLabel negative = EventLabel::Normal;
    Eigen::MatrixXd support_x;
    Eigen::VectorXd coef; // alpha_i * y_i
    double rho = 0.0;
    double final_violation = 0.0; // m - M at the last iteration
    bool converged = true;
};

struct SvmModel {
    SvmSpec spec;
    Eigen::Index n_features = 0;
    std::vector<EventLabel> classes; // classes present in training, ascending
    std::vector<BinarySvm> machines; // all unordered class pairs
};

SvmModel train_svm(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y, const SvmSpec& spec);

double svm_decision(const BinarySvm& machine, double gamma, const Eigen::Ref<const Eigen::RowVectorXd>& row);

// One-vs-one vote counts normalized to sum 1.
Eigen::MatrixXd svm_scores(const SvmModel& model, const Eigen::MatrixXd& rows);
std::vector<EventLabel> svm_predict(const SvmModel& model, const Eigen::MatrixXd& rows);

} // namespace cpids
