#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpids/audit.hpp"
#include "cpids/evaluate.hpp"
#include "cpids/fuse.hpp"
#include "cpids/ingest.hpp"
#include "cpids/netfeat.hpp"
#include "cpids/partition.hpp"
#include "cpids/physfeat.hpp"
#include "cpids/pipeline.hpp"
#include "cpids/synth.hpp"

namespace cpids {

// Full description of one run. It is validated before any computation and
// serialized verbatim into every output directory so results stay traceable.
struct RunConfig {
    // raw inputs
    std::string packets_path;
    std::string physical_path;
    std::string labels_path;
    std::map<std::string, std::string> schema; // logical -> actual column name
    char delimiter = ',';
    double max_cadence_gap = 1.5;

    // partition
    std::size_t test_events_per_class = 2;
    double normal_train_fraction = 0.8;

    // directories
    std::string features_dir; // written by `features`, read by `experiment`
    std::string out_dir;
    std::string model_dir; // read by `predict`
    std::string grid_path; // optional candidate-grid JSON

    // experiment
    std::vector<FeatureView> views{FeatureView::Network, FeatureView::Fused};
    std::vector<ClassifierFamily> families{ClassifierFamily::RF, ClassifierFamily::KNN,
                                           ClassifierFamily::SVM, ClassifierFamily::ANN};
    std::size_t cv_folds = 5;
    bool filter = true;
    std::size_t filter_window = 6;
    std::uint64_t seed = 1;

    // synth
    SynthConfig synth;
};

nlohmann::json run_config_to_json(const RunConfig& config);
IngestOptions ingest_options(const RunConfig& config);

// ---------------------------------------------------------------- features

struct FeatureArtifacts {
    FeatureTable table; // fused, constant columns already pruned
    PruneLog prune_log;
    Vocabularies vocab;
    CycleModel cycle;
    SplitSpec split;
    std::vector<EventSpan> spans;
};

// Ingested records -> fused per-second feature table plus all fitted
// extraction state. Physical timestamps are floored to their second so the
// two sources share one axis; every fit consumes training rows only.
FeatureArtifacts compute_features(const std::vector<PacketRecord>& packets,
                                  std::vector<PhysicalRecord> physical,
                                  const std::vector<EventSpan>& spans, const SplitOptions& opts);

void write_features(const FeatureArtifacts& art, const RunConfig& config, const std::string& dir);
FeatureArtifacts load_features(const std::string& dir);

void run_features(const RunConfig& config);

// -------------------------------------------------------------- experiment

struct ModelOutcome {
    PipelineConfig config; // the trained candidate (grid winner or fixed)
    TrainedPipeline pipeline;
    std::optional<GridSearchResult> grid;
    std::vector<std::string> input_columns; // exact training feature order
    std::vector<double> test_ts;
    std::vector<EventLabel> test_truth;
    std::vector<EventLabel> raw;
    std::vector<EventLabel> filtered;
    ConfusionMatrix cm_raw;
    ConfusionMatrix cm_filtered;
    F1Result f1_raw;
    F1Result f1_filtered;
    DelayReport delay_raw;
    DelayReport delay_filtered;
};

struct ExperimentResult {
    std::vector<ModelOutcome> outcomes;
    ComparisonReport comparison; // unfiltered macro F1, fused vs network
};

// Reference pipeline configuration per view and family (the shipped
// defaults used when no candidate grid is supplied).
PipelineConfig default_config(FeatureView view, ClassifierFamily family);
std::vector<PipelineConfig> default_configs(FeatureView view);

// Trains and evaluates one model slot. With a single candidate it is fitted
// directly; with several, a stratified CV grid search picks the winner,
// which is refit on the full training rows.
ModelOutcome evaluate_model(const FeatureArtifacts& art, const FeatureTable& view_table,
                            const std::vector<PipelineConfig>& candidates, std::size_t cv_folds,
                            std::uint64_t seed, AuditLog* audit = nullptr);

ExperimentResult run_experiment_data(const FeatureArtifacts& art, const RunConfig& config,
                                     AuditLog* audit = nullptr);

void write_experiment(const ExperimentResult& result, const RunConfig& config,
                      const std::string& dir);

void run_experiment(const RunConfig& config);

// ----------------------------------------------------------------- predict

struct PredictResult {
    std::vector<double> ts;
    std::vector<EventLabel> raw;
    std::vector<EventLabel> filtered;
};

// Re-extracts features from new raw data with the fitted vocabularies and
// cycle model, restricts them to the training column order and runs the
// pipeline plus the majority filter.
PredictResult predict_data(const std::vector<PacketRecord>& packets,
                           std::vector<PhysicalRecord> physical, const Vocabularies& vocab,
                           const CycleModel& cycle, const TrainedPipeline& pipeline,
                           const std::vector<std::string>& input_columns);

void run_predict(const RunConfig& config);

// ------------------------------------------------------------------- synth

void run_synth(const RunConfig& config);

} // namespace cpids
