#include "cpids/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/postfilter.hpp"
#include "cpids/rng.hpp"

namespace fs = std::filesystem;

namespace cpids {

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) raise(errc::io_error, "cannot read " + path);
    return os.str();
}

void make_dirs(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(errc::io_error, "cannot create directory " + dir + ": " + ec.message());
}

void need(const std::string& value, const char* what) {
    if (value.empty()) raise(errc::invalid_config, std::string(what) + " must be set");
}

std::string path_join(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

} // namespace

nlohmann::json run_config_to_json(const RunConfig& config) {
    nlohmann::json j;
    j["packets_path"] = config.packets_path;
    j["physical_path"] = config.physical_path;
    j["labels_path"] = config.labels_path;
    j["schema"] = config.schema;
    j["delimiter"] = std::string(1, config.delimiter);
    j["max_cadence_gap"] = config.max_cadence_gap;
    j["test_events_per_class"] = config.test_events_per_class;
    j["normal_train_fraction"] = config.normal_train_fraction;
    j["features_dir"] = config.features_dir;
    j["out_dir"] = config.out_dir;
    j["model_dir"] = config.model_dir;
    j["grid_path"] = config.grid_path;
    std::vector<std::string> views;
    for (FeatureView v : config.views) views.emplace_back(view_name(v));
    j["views"] = views;
    std::vector<std::string> families;
    for (ClassifierFamily f : config.families) families.emplace_back(family_name(f));
    j["families"] = families;
    j["cv_folds"] = config.cv_folds;
    j["filter"] = config.filter;
    j["filter_window"] = config.filter_window;
    j["seed"] = config.seed;
    j["synth"] = {{"duration", config.synth.duration},
                  {"cycle_period", config.synth.cycle_period},
                  {"events_per_class", config.synth.events_per_class},
                  {"head", config.synth.head},
                  {"attack_duration", config.synth.attack_duration},
                  {"scan_duration", config.synth.scan_duration},
                  {"min_gap", config.synth.min_gap},
                  {"base_exchanges", config.synth.base_exchanges},
                  {"dos_rate", config.synth.dos_rate},
                  {"scan_rate", config.synth.scan_rate},
                  {"seed", config.synth.seed}};
    return j;
}

IngestOptions ingest_options(const RunConfig& config) {
    IngestOptions opts;
    opts.schema.columns = config.schema;
    opts.delimiter = config.delimiter;
    opts.max_cadence_gap = config.max_cadence_gap;
    return opts;
}

namespace {

void write_run_config(const RunConfig& config, const std::string& dir) {
    csv::write_text_atomic(path_join(dir, "run_config.json"), run_config_to_json(config).dump(2) + "\n");
}

} // namespace

// ---------------------------------------------------------------- features

FeatureArtifacts compute_features(const std::vector<PacketRecord>& packets,
                                  std::vector<PhysicalRecord> physical,
                                  const std::vector<EventSpan>& spans, const SplitOptions& opts) {
    if (physical.empty()) raise(errc::empty_file, "no physical records to featurize");

    // both sources share the integral-second axis of the physical stream
    for (auto& r : physical) r.ts = std::floor(r.ts);
    for (std::size_t i = 1; i < physical.size(); ++i)
        if (!(physical[i - 1].ts < physical[i].ts))
            raise(errc::cadence_violation, "two physical records fall in the same second (ts " +
                                               csv::format_double(physical[i].ts) + ")");

    std::vector<double> axis;
    axis.reserve(physical.size());
    for (const auto& r : physical) axis.push_back(r.ts);

    FeatureArtifacts art;
    art.spans = spans;
    art.split = split_axis(axis, spans, opts);

    std::set<std::int64_t> train_seconds;
    std::vector<PhysicalRecord> train_records;
    train_records.reserve(art.split.train_rows.size());
    for (std::size_t r : art.split.train_rows) {
        train_seconds.insert(static_cast<std::int64_t>(axis[r]));
        train_records.push_back(physical[r]);
    }

    art.vocab = fit_vocabularies(packets, spans, train_seconds, opts.policy);
    art.cycle = fit_cycle(train_records);

    const CycleModel anchored = reanchor(art.cycle, physical);
    const std::vector<PhysWindowFeatures> phys_feats = extract_phys(physical, anchored);

    const auto t0 = static_cast<std::int64_t>(axis.front());
    const auto t1 = static_cast<std::int64_t>(axis.back()) + 1;
    std::vector<NetWindowFeatures> net_all = extract_all(packets, art.vocab, t0, t1);
    std::vector<NetWindowFeatures> net_sel;
    net_sel.reserve(axis.size());
    for (double a : axis) net_sel.push_back(std::move(net_all[static_cast<std::size_t>(
        static_cast<std::int64_t>(a) - t0)]));

    FeatureTable fused = fuse(net_sel, art.vocab.layout, phys_feats, spans, opts.policy);
    auto [pruned, log] = prune_constant(fused, art.split.train_rows);
    art.table = std::move(pruned);
    art.prune_log = std::move(log);
    return art;
}

void write_features(const FeatureArtifacts& art, const RunConfig& config, const std::string& dir) {
    make_dirs(dir);
    csv::write_text_atomic(path_join(dir, "table.csv"), serialize_table_csv(art.table));
    csv::write_text_atomic(path_join(dir, "table_meta.json"), serialize_table_meta(art.table, art.prune_log));
    csv::write_text_atomic(path_join(dir, "vocab.json"), serialize_vocabularies(art.vocab));
    csv::write_text_atomic(path_join(dir, "cycle.json"), serialize_cycle(art.cycle));
    csv::write_text_atomic(path_join(dir, "split.json"), serialize_split(art.split));
    csv::write_text_atomic(path_join(dir, "labels.csv"), serialize_labels(art.spans));
    write_run_config(config, dir);
}

FeatureArtifacts load_features(const std::string& dir) {
    FeatureArtifacts art;
    const std::string meta_text = read_text(path_join(dir, "table_meta.json"));
    art.table = deserialize_table(read_text(path_join(dir, "table.csv")), meta_text);
    const nlohmann::json meta = nlohmann::json::parse(meta_text);
    art.prune_log.removed = meta.value("pruned", std::vector<std::string>{});
    art.prune_log.test_varying_warnings = meta.value("pruned_test_varying", std::vector<std::string>{});
    art.vocab = deserialize_vocabularies(read_text(path_join(dir, "vocab.json")));
    art.cycle = deserialize_cycle(read_text(path_join(dir, "cycle.json")));
    art.split = deserialize_split(read_text(path_join(dir, "split.json")));
    art.spans = load_labels(path_join(dir, "labels.csv"));
    return art;
}

void run_features(const RunConfig& config) {
    need(config.packets_path, "packets path");
    need(config.physical_path, "physical path");
    need(config.labels_path, "labels path");
    need(config.features_dir, "features directory");

    const IngestOptions opts = ingest_options(config);
    const auto packets = load_packets(config.packets_path, opts);
    auto physical = load_physical(config.physical_path, opts);
    const auto spans = load_labels(config.labels_path, opts);

    SplitOptions split_opts;
    split_opts.test_events_per_class = config.test_events_per_class;
    split_opts.normal_train_fraction = config.normal_train_fraction;

    const FeatureArtifacts art = compute_features(packets, std::move(physical), spans, split_opts);
    write_features(art, config, config.features_dir);
}

// -------------------------------------------------------------- experiment

PipelineConfig default_config(FeatureView view, ClassifierFamily family) {
    PipelineConfig c;
    c.view = view;
    c.name = std::string(view_name(view)) + "." + family_name(family);
    c.classifier.family = family;
    const bool fused = view == FeatureView::Fused || view == FeatureView::Physical;
    switch (family) {
    case ClassifierFamily::RF:
        c.scaler = fused ? ScalerKind::Standardize : ScalerKind::MaxAbs;
        c.undersampler = fused ? ResamplerKind::None : ResamplerKind::Iht;
        c.oversampler = fused ? ResamplerKind::Smote : ResamplerKind::None;
        c.classifier.rf.n_estimators = 100;
        c.classifier.rf.n_max_features = 17;
        break;
    case ClassifierFamily::KNN:
        c.scaler = ScalerKind::Standardize;
        c.pca = true;
        c.undersampler = fused ? ResamplerKind::None : ResamplerKind::Tomek;
        c.classifier.knn.n_neighbors = 5;
        c.classifier.knn.metric = KnnMetric::Manhattan;
        c.classifier.knn.weighting = fused ? KnnWeighting::Distance : KnnWeighting::Uniform;
        break;
    case ClassifierFamily::SVM:
        c.scaler = ScalerKind::MaxAbs;
        c.oversampler = fused ? ResamplerKind::BorderlineSmote : ResamplerKind::None;
        c.classifier.svm.C = 10000.0;
        c.classifier.svm.gamma = 0.0175;
        break;
    case ClassifierFamily::ANN:
        c.scaler = ScalerKind::MaxAbs;
        c.pca = true;
        c.oversampler = ResamplerKind::BorderlineSmote;
        c.classifier.ann.hidden = fused ? std::vector<std::size_t>{150, 150}
                                        : std::vector<std::size_t>{100, 100};
        c.classifier.ann.dropout = 0.5;
        c.classifier.ann.epochs = 500;
        c.classifier.ann.batch_size = fused ? 512 : 256;
        break;
    }
    return c;
}

std::vector<PipelineConfig> default_configs(FeatureView view) {
    return {default_config(view, ClassifierFamily::RF), default_config(view, ClassifierFamily::KNN),
            default_config(view, ClassifierFamily::SVM), default_config(view, ClassifierFamily::ANN)};
}

namespace {

struct SplitMatrices {
    Eigen::MatrixXd train_x, test_x;
    std::vector<EventLabel> train_y, test_y;
    std::vector<double> train_ts, test_ts;
};

SplitMatrices slice(const FeatureTable& table, const SplitSpec& split) {
    SplitMatrices m;
    auto fill = [&](const std::vector<std::size_t>& rows, Eigen::MatrixXd& X,
                    std::vector<EventLabel>& y, std::vector<double>& ts) {
        X.resize(static_cast<Eigen::Index>(rows.size()), table.values.cols());
        y.reserve(rows.size());
        ts.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            X.row(static_cast<Eigen::Index>(i)) = table.values.row(static_cast<Eigen::Index>(rows[i]));
            y.push_back(table.labels[rows[i]]);
            ts.push_back(table.ts[rows[i]]);
        }
    };
    fill(split.train_rows, m.train_x, m.train_y, m.train_ts);
    fill(split.test_rows, m.test_x, m.test_y, m.test_ts);
    return m;
}

std::vector<EventSpan> test_spans(const FeatureArtifacts& art) {
    std::vector<EventSpan> out;
    for (const EventSpan& s : art.spans) {
        auto it = art.split.test_events.find(s.label);
        if (it == art.split.test_events.end()) continue;
        if (std::find(it->second.begin(), it->second.end(), s.event_id) != it->second.end())
            out.push_back(s);
    }
    return out;
}

} // namespace

ModelOutcome evaluate_model(const FeatureArtifacts& art, const FeatureTable& view_table,
                            const std::vector<PipelineConfig>& candidates, std::size_t cv_folds,
                            std::uint64_t seed, AuditLog* audit) {
    if (candidates.empty()) raise(errc::empty_grid, "no pipeline candidates for this model slot");
    const SplitMatrices m = slice(view_table, art.split);

    ModelOutcome out;
    PipelineConfig chosen = candidates.front();
    if (candidates.size() > 1) {
        out.grid = grid_search(m.train_x, m.train_y, candidates, cv_folds, seed, audit, &m.train_ts);
        chosen = out.grid->table[out.grid->winner].config;
    }
    out.config = chosen;
    out.pipeline = fit_pipeline(m.train_x, m.train_y, chosen, seed, audit, &m.train_ts);
    if (out.grid) out.pipeline.fold_scores = out.grid->table[out.grid->winner].fold_scores;

    out.input_columns = view_table.column_names;
    out.test_ts = m.test_ts;
    out.test_truth = m.test_y;
    out.raw = predict_pipeline(out.pipeline, m.test_x);
    out.filtered = chosen.filter ? filter_sequence(out.raw, chosen.filter_window) : out.raw;

    out.cm_raw = confusion(out.test_truth, out.raw);
    out.cm_filtered = confusion(out.test_truth, out.filtered);
    out.f1_raw = f1_scores(out.cm_raw);
    out.f1_filtered = f1_scores(out.cm_filtered);

    const std::vector<EventSpan> held_out = test_spans(art);
    out.delay_raw = detection_delay(held_out, out.test_ts, out.raw);
    out.delay_filtered = detection_delay(held_out, out.test_ts, out.filtered);
    return out;
}

ExperimentResult run_experiment_data(const FeatureArtifacts& art, const RunConfig& config,
                                     AuditLog* audit) {
    std::vector<PipelineConfig> grid_candidates;
    if (!config.grid_path.empty()) {
        const nlohmann::json j = nlohmann::json::parse(read_text(config.grid_path));
        if (!j.is_object() || !j.contains("candidates") || !j.at("candidates").is_array())
            raise(errc::invalid_config, "grid file must hold a JSON object with a 'candidates' array");
        for (const auto& c : j.at("candidates")) grid_candidates.push_back(pipeline_config_from_json(c));
        if (grid_candidates.empty()) raise(errc::empty_grid, "grid file lists no candidates");
    }

    ExperimentResult result;
    Rng root(config.seed);
    std::vector<ViewModelScore> scores;
    std::uint64_t slot = 0;
    for (FeatureView view : config.views) {
        const FeatureTable view_table = select_view(art.table, view);
        for (ClassifierFamily family : config.families) {
            std::vector<PipelineConfig> candidates;
            if (grid_candidates.empty()) {
                PipelineConfig c = default_config(view, family);
                c.filter = config.filter;
                c.filter_window = config.filter_window;
                candidates.push_back(std::move(c));
            } else {
                for (const PipelineConfig& c : grid_candidates)
                    if (c.view == view && c.classifier.family == family) candidates.push_back(c);
                if (candidates.empty()) continue; // the grid does not cover this slot
            }
            const std::uint64_t slot_seed = root.fork(slot++).next_u64();
            ModelOutcome outcome =
                evaluate_model(art, view_table, candidates, config.cv_folds, slot_seed, audit);
            scores.push_back({family_name(family), view, outcome.f1_raw});
            result.outcomes.push_back(std::move(outcome));
        }
    }
    result.comparison = compare_views(scores);
    return result;
}

namespace {

nlohmann::json f1_to_json(const F1Result& f1) {
    nlohmann::json per_class;
    for (int i = 0; i < kNumClasses; ++i)
        per_class[label_name(static_cast<EventLabel>(i))] = f1.per_class[static_cast<std::size_t>(i)];
    std::vector<std::string> warn;
    for (EventLabel l : f1.zero_support_warnings) warn.emplace_back(label_name(l));
    return {{"per_class", per_class}, {"macro", f1.macro}, {"zero_support", warn}};
}

nlohmann::json delay_to_json(const DelayReport& d) {
    nlohmann::json events = nlohmann::json::array();
    for (const EventDelay& e : d.events) {
        nlohmann::json je = {{"event_id", e.event_id}, {"label", label_name(e.label)},
                             {"t_start", e.t_start},   {"t_end", e.t_end},
                             {"detected", e.detected}, {"delay", e.delay}};
        if (e.detected) je["t_det"] = e.t_det;
        events.push_back(std::move(je));
    }
    nlohmann::json tau, tau_p;
    for (const auto& [label, v] : d.tau) tau[label_name(label)] = v;
    for (const auto& [label, v] : d.tau_pessimistic) tau_p[label_name(label)] = v;
    nlohmann::json j = {{"events", events},
                        {"tau", tau},
                        {"tau_pessimistic", tau_p},
                        {"undetected", d.undetected.size()}};
    j["mean_tau"] = d.mean_tau ? nlohmann::json(*d.mean_tau) : nlohmann::json(nullptr);
    j["mean_tau_pessimistic"] =
        d.mean_tau_pessimistic ? nlohmann::json(*d.mean_tau_pessimistic) : nlohmann::json(nullptr);
    return j;
}

std::string outcome_report(const ModelOutcome& o) {
    nlohmann::json j;
    j["config"] = pipeline_config_to_json(o.config);
    j["seed"] = o.pipeline.seed;
    j["test_rows"] = o.test_ts.size();
    j["f1"] = {{"raw", f1_to_json(o.f1_raw)}, {"filtered", f1_to_json(o.f1_filtered)}};
    j["delay"] = {{"raw", delay_to_json(o.delay_raw)}, {"filtered", delay_to_json(o.delay_filtered)}};
    j["fold_scores"] = o.pipeline.fold_scores;
    return j.dump(2) + "\n";
}

} // namespace

void write_experiment(const ExperimentResult& result, const RunConfig& config,
                      const std::string& dir) {
    make_dirs(dir);
    write_run_config(config, dir);
    csv::write_text_atomic(path_join(dir, "comparison.csv"), serialize_comparison(result.comparison));
    for (const ModelOutcome& o : result.outcomes) {
        const std::string model_dir =
            (fs::path(dir) / view_name(o.config.view) / family_name(o.config.classifier.family)).string();
        make_dirs(model_dir);
        csv::write_text_atomic(path_join(model_dir, "report.json"), outcome_report(o));
        csv::write_text_atomic(path_join(model_dir, "pipeline.json"), serialize_pipeline(o.pipeline));
        nlohmann::json cols = {{"format", "cpids.columns"}, {"version", 1}, {"columns", o.input_columns}};
        csv::write_text_atomic(path_join(model_dir, "input_columns.json"), cols.dump(2) + "\n");
        csv::write_text_atomic(path_join(model_dir, "confusion_raw.csv"), serialize_confusion(o.cm_raw));
        csv::write_text_atomic(path_join(model_dir, "confusion_filtered.csv"),
                               serialize_confusion(o.cm_filtered));
        if (!o.test_ts.empty())
            csv::write_text_atomic(path_join(model_dir, "timeline.csv"),
                                   export_timeline(o.test_ts, o.test_truth, o.raw, o.filtered,
                                                   o.test_ts.front(), o.test_ts.back() + 1.0));
        if (o.grid)
            csv::write_text_atomic(path_join(model_dir, "grid.csv"), serialize_grid_table(*o.grid));
    }
}

void run_experiment(const RunConfig& config) {
    need(config.features_dir, "features directory");
    need(config.out_dir, "output directory");
    const FeatureArtifacts art = load_features(config.features_dir);
    const ExperimentResult result = run_experiment_data(art, config);
    write_experiment(result, config, config.out_dir);
}

// ----------------------------------------------------------------- predict

PredictResult predict_data(const std::vector<PacketRecord>& packets,
                           std::vector<PhysicalRecord> physical, const Vocabularies& vocab,
                           const CycleModel& cycle, const TrainedPipeline& pipeline,
                           const std::vector<std::string>& input_columns) {
    if (physical.empty()) raise(errc::empty_file, "no physical records to predict on");
    for (auto& r : physical) r.ts = std::floor(r.ts);
    for (std::size_t i = 1; i < physical.size(); ++i)
        if (!(physical[i - 1].ts < physical[i].ts))
            raise(errc::cadence_violation, "two physical records fall in the same second (ts " +
                                               csv::format_double(physical[i].ts) + ")");

    std::vector<double> axis;
    axis.reserve(physical.size());
    for (const auto& r : physical) axis.push_back(r.ts);

    const CycleModel anchored = reanchor(cycle, physical);
    const std::vector<PhysWindowFeatures> phys_feats = extract_phys(physical, anchored);

    const auto t0 = static_cast<std::int64_t>(axis.front());
    const auto t1 = static_cast<std::int64_t>(axis.back()) + 1;
    std::vector<NetWindowFeatures> net_all = extract_all(packets, vocab, t0, t1);
    std::vector<NetWindowFeatures> net_sel;
    net_sel.reserve(axis.size());
    for (double a : axis) net_sel.push_back(std::move(net_all[static_cast<std::size_t>(
        static_cast<std::int64_t>(a) - t0)]));

    const FeatureTable fused = fuse(net_sel, vocab.layout, phys_feats, {});
    const FeatureTable projected = project_columns(fused, input_columns);

    PredictResult out;
    out.ts = projected.ts;
    out.raw = predict_pipeline(pipeline, projected.values);
    out.filtered = pipeline.config.filter ? filter_sequence(out.raw, pipeline.config.filter_window)
                                          : out.raw;
    return out;
}

void run_predict(const RunConfig& config) {
    need(config.model_dir, "model directory");
    need(config.features_dir, "features directory");
    need(config.packets_path, "packets path");
    need(config.physical_path, "physical path");
    need(config.out_dir, "output directory");

    const TrainedPipeline pipeline =
        deserialize_pipeline(read_text(path_join(config.model_dir, "pipeline.json")));
    const nlohmann::json cols_json =
        nlohmann::json::parse(read_text(path_join(config.model_dir, "input_columns.json")));
    if (cols_json.value("format", "") != "cpids.columns" || cols_json.value("version", 0) != 1)
        raise(errc::bundle_version_mismatch, "unsupported input-columns bundle");
    const auto input_columns = cols_json.at("columns").get<std::vector<std::string>>();

    const Vocabularies vocab =
        deserialize_vocabularies(read_text(path_join(config.features_dir, "vocab.json")));
    const CycleModel cycle = deserialize_cycle(read_text(path_join(config.features_dir, "cycle.json")));

    const IngestOptions opts = ingest_options(config);
    const auto packets = load_packets(config.packets_path, opts);
    auto physical = load_physical(config.physical_path, opts);

    const PredictResult result =
        predict_data(packets, std::move(physical), vocab, cycle, pipeline, input_columns);

    make_dirs(config.out_dir);
    std::ostringstream os;
    os << "ts,raw,filtered\n";
    for (std::size_t i = 0; i < result.ts.size(); ++i)
        os << csv::format_double(result.ts[i]) << ',' << label_name(result.raw[i]) << ','
           << label_name(result.filtered[i]) << '\n';
    csv::write_text_atomic(path_join(config.out_dir, "predictions.csv"), os.str());
    write_run_config(config, config.out_dir);
}

// ------------------------------------------------------------------- synth

void run_synth(const RunConfig& config) {
    need(config.out_dir, "output directory");
    const SynthData data = generate_synth(config.synth);
    make_dirs(config.out_dir);
    csv::write_text_atomic(path_join(config.out_dir, "packets.csv"), serialize_packets(data.packets));
    csv::write_text_atomic(path_join(config.out_dir, "physical.csv"), serialize_physical(data.physical));
    csv::write_text_atomic(path_join(config.out_dir, "labels.csv"), serialize_labels(data.spans));
    write_run_config(config, config.out_dir);
}

} // namespace cpids
