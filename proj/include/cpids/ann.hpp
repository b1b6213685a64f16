#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "cpids/rng.hpp"
#include "cpids/types.hpp"

namespace cpids {

struct AnnSpec {
    std::vector<std::size_t> hidden{150, 150};
    double dropout = 0.5; // applied to hidden activations during training only
    std::size_t epochs = 500;
    std::size_t batch_size = 512;
    double learning_rate = 1e-3;
};

// Dense ReLU network with a softmax head over the classes seen in training.
struct AnnModel {
    AnnSpec spec;
    Eigen::Index n_features = 0;
    std::vector<EventLabel> classes;  // output order
    std::vector<Eigen::MatrixXd> W;   // W[l]: fan_in x fan_out
    std::vector<Eigen::RowVectorXd> b;
};

AnnModel train_ann(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y, const AnnSpec& spec,
                   Rng& rng);

// Softmax probabilities spread into the full class vector (absent classes 0).
Eigen::MatrixXd ann_scores(const AnnModel& model, const Eigen::MatrixXd& rows);
std::vector<EventLabel> ann_predict(const AnnModel& model, const Eigen::MatrixXd& rows);

// Mean cross-entropy over the batch plus analytic gradients, dropout off.
// Exposed so the analytic gradients can be checked against finite differences.
double ann_loss_and_gradients(const AnnModel& model, const Eigen::MatrixXd& X,
                              const std::vector<std::size_t>& target_idx,
                              std::vector<Eigen::MatrixXd>* grad_W,
                              std::vector<Eigen::RowVectorXd>* grad_b);

} // namespace cpids
