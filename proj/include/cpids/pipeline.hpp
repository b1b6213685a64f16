#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpids/audit.hpp"
#include "cpids/classify.hpp"
#include "cpids/fuse.hpp"
#include "cpids/transform.hpp"
#include "cpids/types.hpp"

namespace cpids {

// One candidate detection pipeline: scaling -> dimensionality reduction ->
// undersampling -> oversampling -> classification -> filtering. Every step
// except classification can be bypassed.
struct PipelineConfig {
    std::string name; // report label, defaults to the classifier family
    FeatureView view = FeatureView::Fused;
    ScalerKind scaler = ScalerKind::None;
    bool pca = false;
    ResamplerKind undersampler = ResamplerKind::None;
    ResamplerKind oversampler = ResamplerKind::None;
    ClassifierSpec classifier;
    bool filter = true;
    std::size_t filter_window = 6;
    ResampleOptions resample_opts;
};

void validate_config(const PipelineConfig& config);

struct TrainedPipeline {
    PipelineConfig config;
    Scaler scaler;
    std::optional<PcaModel> pca;
    TrainedClassifier classifier;
    std::uint64_t seed = 0;
    std::vector<double> fold_scores; // provenance from model selection
};

// row_ts, when given, must parallel X's rows; it feeds the audit log so
// leakage checks can prove which timestamps each fit consumed.
TrainedPipeline fit_pipeline(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                             const PipelineConfig& config, std::uint64_t seed, AuditLog* audit = nullptr,
                             const std::vector<double>* row_ts = nullptr);

std::vector<EventLabel> predict_pipeline(const TrainedPipeline& pipeline, const Eigen::MatrixXd& rows);
Eigen::MatrixXd pipeline_scores(const TrainedPipeline& pipeline, const Eigen::MatrixXd& rows);

struct CandidateResult {
    PipelineConfig config;
    std::vector<double> fold_scores;
    double mean_score = 0.0;
    double stdev = 0.0;
    std::vector<std::string> failures; // per-fold failure notes, never fatal
};

struct GridSearchResult {
    std::vector<CandidateResult> table;
    std::size_t winner = 0;
};

// Each candidate scored by macro F1 averaged over k stratified shuffled
// folds; per-fold state is refit inside each fold. Ties go to the candidate
// with fewer pipeline steps, then the smaller model, then grid order.
GridSearchResult grid_search(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                             const std::vector<PipelineConfig>& grid, std::size_t k, std::uint64_t seed,
                             AuditLog* audit = nullptr, const std::vector<double>* row_ts = nullptr);

std::string serialize_grid_table(const GridSearchResult& result);

nlohmann::json pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

std::string serialize_pipeline(const TrainedPipeline& pipeline);
TrainedPipeline deserialize_pipeline(const std::string& text); // fails closed on version mismatch

} // namespace cpids
