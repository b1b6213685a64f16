#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpids/types.hpp"

namespace cpids {

enum class ScalerKind { None, Standardize, MinMax01, MaxAbs };

ScalerKind parse_scaler(const std::string& name);
const char* scaler_name(ScalerKind kind);

struct Scaler {
    ScalerKind kind = ScalerKind::None;
    Eigen::VectorXd center; // standardize: column means
    Eigen::VectorXd scale;  // divisor per column (stdev, max-min, or max-abs)
    Eigen::VectorXd offset; // minmax01: column minima
};

// Statistics come from the training rows only; test data is transformed with
// the fitted state and may land outside the canonical range.
Scaler fit_scaler(const Eigen::MatrixXd& train, ScalerKind kind);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& rows);

struct PcaModel {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd components;  // k x d, orthonormal rows
    Eigen::VectorXd eigenvalues; // full covariance spectrum used for selection
    std::size_t k = 0;
};

// Component count selected by maximizing the Bayesian evidence approximation
// over candidate dimensionalities; ties go to the smaller count and the
// result is capped at the numerical rank.
PcaModel fit_pca(const Eigen::MatrixXd& train);
Eigen::MatrixXd apply_pca(const PcaModel& model, const Eigen::MatrixXd& rows);
Eigen::MatrixXd inverse_pca(const PcaModel& model, const Eigen::MatrixXd& projected);

// Exposed for testing: log-evidence of "the data has `rank` signal
// dimensions" given the covariance spectrum and sample count.
double pca_log_evidence(const Eigen::VectorXd& spectrum, std::size_t rank, std::size_t n_samples);

enum class ResamplerKind { None, Tomek, Iht, Smote, BorderlineSmote };

ResamplerKind parse_resampler(const std::string& name);
const char* resampler_name(ResamplerKind kind);

struct ResampleOptions {
    std::size_t k_neighbors = 5;     // SMOTE variants
    std::size_t iht_estimators = 50; // internal forest size
    std::size_t iht_folds = 3;
};

struct ResampleResult {
    Eigen::MatrixXd rows;
    std::vector<EventLabel> labels;
};

// Training-data-only step. Distances are Euclidean on the incoming (already
// scaled) space.
ResampleResult resample(const Eigen::MatrixXd& rows, const std::vector<EventLabel>& labels,
                        ResamplerKind kind, std::uint64_t seed, const ResampleOptions& opts = {});

nlohmann::json scaler_to_json(const Scaler& scaler);
Scaler scaler_from_json(const nlohmann::json& j);
nlohmann::json pca_to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);

} // namespace cpids
