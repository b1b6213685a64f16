#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/experiment.hpp"
#include "cpids/postfilter.hpp"

using namespace cpids;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("cpids_exp_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& leaf = "") const {
        return leaf.empty() ? path.string() : (path / leaf).string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SynthConfig small_synth() {
    SynthConfig c;
    c.duration = 600.0;
    c.cycle_period = 120.0;
    c.events_per_class = 3;
    c.head = 60.0;
    c.attack_duration = 15.0;
    c.scan_duration = 8.0;
    c.min_gap = 12.0;
    c.base_exchanges = 6;
    c.dos_rate = 50;
    c.scan_rate = 20;
    c.seed = 5;
    return c;
}

const SynthData& shared_data() {
    static const SynthData data = generate_synth(small_synth());
    return data;
}

const FeatureArtifacts& shared_features() {
    static const FeatureArtifacts art = [] {
        const SynthData& d = shared_data();
        return compute_features(d.packets, d.physical, d.spans, SplitOptions{});
    }();
    return art;
}

PipelineConfig knn_candidate(FeatureView view, std::size_t k = 1) {
    PipelineConfig c;
    c.view = view;
    c.classifier.family = ClassifierFamily::KNN;
    c.classifier.knn.n_neighbors = k;
    return c;
}

} // namespace

TEST_CASE("the shipped default configurations carry the documented settings") {
    // strongest-view defaults
    auto rf = default_config(FeatureView::Fused, ClassifierFamily::RF);
    CHECK(rf.name == "fused.rf");
    CHECK(rf.scaler == ScalerKind::Standardize);
    CHECK(!rf.pca);
    CHECK(rf.undersampler == ResamplerKind::None);
    CHECK(rf.oversampler == ResamplerKind::Smote);
    CHECK(rf.classifier.rf.n_estimators == 100);
    CHECK(rf.classifier.rf.n_max_features == 17);

    auto knn = default_config(FeatureView::Fused, ClassifierFamily::KNN);
    CHECK(knn.name == "fused.knn");
    CHECK(knn.scaler == ScalerKind::Standardize);
    CHECK(knn.pca);
    CHECK(knn.undersampler == ResamplerKind::None);
    CHECK(knn.oversampler == ResamplerKind::None);
    CHECK(knn.classifier.knn.n_neighbors == 5);
    CHECK(knn.classifier.knn.metric == KnnMetric::Manhattan);
    CHECK(knn.classifier.knn.weighting == KnnWeighting::Distance);

    auto svm = default_config(FeatureView::Fused, ClassifierFamily::SVM);
    CHECK(svm.name == "fused.svm");
    CHECK(svm.scaler == ScalerKind::MaxAbs);
    CHECK(!svm.pca);
    CHECK(svm.oversampler == ResamplerKind::BorderlineSmote);
    CHECK(svm.classifier.svm.C == 10000.0);
    CHECK(svm.classifier.svm.gamma == 0.0175);

    auto ann = default_config(FeatureView::Fused, ClassifierFamily::ANN);
    CHECK(ann.name == "fused.ann");
    CHECK(ann.scaler == ScalerKind::MaxAbs);
    CHECK(ann.pca);
    CHECK(ann.oversampler == ResamplerKind::BorderlineSmote);
    CHECK(ann.classifier.ann.hidden == std::vector<std::size_t>{150, 150});
    CHECK(ann.classifier.ann.dropout == 0.5);
    CHECK(ann.classifier.ann.epochs == 500);
    CHECK(ann.classifier.ann.batch_size == 512);

    // network-view defaults differ where the reference setup differs
    auto nrf = default_config(FeatureView::Network, ClassifierFamily::RF);
    CHECK(nrf.name == "network.rf");
    CHECK(nrf.scaler == ScalerKind::MaxAbs);
    CHECK(nrf.undersampler == ResamplerKind::Iht);
    CHECK(nrf.oversampler == ResamplerKind::None);

    auto nknn = default_config(FeatureView::Network, ClassifierFamily::KNN);
    CHECK(nknn.undersampler == ResamplerKind::Tomek);
    CHECK(nknn.classifier.knn.weighting == KnnWeighting::Uniform);

    auto nsvm = default_config(FeatureView::Network, ClassifierFamily::SVM);
    CHECK(nsvm.oversampler == ResamplerKind::None);
    CHECK(nsvm.classifier.svm.C == 10000.0);
    CHECK(nsvm.classifier.svm.gamma == 0.0175);

    auto nann = default_config(FeatureView::Network, ClassifierFamily::ANN);
    CHECK(nann.classifier.ann.hidden == std::vector<std::size_t>{100, 100});
    CHECK(nann.classifier.ann.batch_size == 256);

    // every default validates and the slot list covers the four families
    for (FeatureView v : {FeatureView::Network, FeatureView::Fused}) {
        auto all = default_configs(v);
        CHECK(all.size() == 4);
        for (const auto& c : all) {
            validate_config(c);
            CHECK(c.view == v);
        }
    }
}

TEST_CASE("feature computation shares one axis and fits on training rows only") {
    const FeatureArtifacts& art = shared_features();
    CHECK(art.table.rows() == 600);
    CHECK(art.table.ts.front() == 0.0);
    CHECK(art.table.ts.back() == 599.0);
    CHECK(art.cycle.d > 119.0);
    CHECK(art.cycle.d < 121.0);

    // both sources contribute columns
    bool has_net = false, has_phys = false;
    for (const auto& name : art.table.column_names) {
        if (name.rfind("net.", 0) == 0) has_net = true;
        if (name.rfind("phys.", 0) == 0) has_phys = true;
    }
    CHECK(has_net);
    CHECK(has_phys);

    // two events of each attack class are reserved for test
    for (EventLabel c : {EventLabel::DoS, EventLabel::MiTM, EventLabel::PhysicalFault,
                         EventLabel::Scanning})
        CHECK(art.split.test_events.at(c).size() == 2);

    // the partition covers each row exactly once
    std::set<std::size_t> seen;
    for (std::size_t r : art.split.train_rows) seen.insert(r);
    for (std::size_t r : art.split.test_rows) {
        CHECK(seen.count(r) == 0);
        seen.insert(r);
    }
    CHECK(seen.size() == art.table.rows());
}

TEST_CASE("feature computation is deterministic") {
    const SynthData& d = shared_data();
    const FeatureArtifacts& a = shared_features();
    const FeatureArtifacts b = compute_features(d.packets, d.physical, d.spans, SplitOptions{});
    CHECK(serialize_table_csv(a.table) == serialize_table_csv(b.table));
    CHECK(serialize_vocabularies(a.vocab) == serialize_vocabularies(b.vocab));
    CHECK(serialize_cycle(a.cycle) == serialize_cycle(b.cycle));
    CHECK(serialize_split(a.split) == serialize_split(b.split));
}

TEST_CASE("feature artifacts round-trip through their directory format") {
    const FeatureArtifacts& art = shared_features();
    TempDir dir("featdir");
    RunConfig config;
    write_features(art, config, dir.str());

    for (const char* leaf : {"table.csv", "table_meta.json", "vocab.json", "cycle.json",
                             "split.json", "labels.csv", "run_config.json"})
        CHECK(fs::exists(dir.path / leaf));

    FeatureArtifacts back = load_features(dir.str());
    CHECK(back.table.ts == art.table.ts);
    CHECK(back.table.labels == art.table.labels);
    CHECK(back.table.column_names == art.table.column_names);
    CHECK(back.table.groups == art.table.groups);
    CHECK((back.table.values - art.table.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.prune_log.removed == art.prune_log.removed);
    CHECK(back.prune_log.test_varying_warnings == art.prune_log.test_varying_warnings);
    CHECK(serialize_vocabularies(back.vocab) == serialize_vocabularies(art.vocab));
    CHECK(serialize_cycle(back.cycle) == serialize_cycle(art.cycle));
    CHECK(serialize_split(back.split) == serialize_split(art.split));
    REQUIRE(back.spans.size() == art.spans.size());
    for (std::size_t i = 0; i < back.spans.size(); ++i) {
        CHECK(back.spans[i].label == art.spans[i].label);
        CHECK(back.spans[i].t_start == art.spans[i].t_start);
        CHECK(back.spans[i].t_end == art.spans[i].t_end);
        CHECK(back.spans[i].event_id == art.spans[i].event_id);
    }
}

TEST_CASE("a single-candidate slot is fitted directly, without cross-validation") {
    const FeatureArtifacts& art = shared_features();
    const FeatureTable fused = select_view(art.table, FeatureView::Fused);
    AuditLog audit;
    ModelOutcome out = evaluate_model(art, fused, {knn_candidate(FeatureView::Fused)}, 5, 3, &audit);

    CHECK(!out.grid.has_value());
    CHECK(out.pipeline.fold_scores.empty());
    CHECK(out.raw.size() == art.split.test_rows.size());
    CHECK(out.filtered == filter_sequence(out.raw, out.config.filter_window));
    CHECK(out.input_columns == fused.column_names);
    CHECK(out.test_ts.size() == out.raw.size());
    CHECK(!audit.events().empty());

    // the crux: no held-out timestamp ever reaches a fit call
    std::set<double> test_ts(out.test_ts.begin(), out.test_ts.end());
    for (const auto& event : audit.events())
        for (double t : event.row_ts) CHECK(test_ts.count(t) == 0);

    // delay reports cover exactly the held-out events
    std::size_t reserved = 0;
    for (const auto& [label, ids] : art.split.test_events) reserved += ids.size();
    CHECK(out.delay_raw.events.size() == reserved);
    CHECK(out.delay_filtered.events.size() == reserved);
}

TEST_CASE("a multi-candidate slot runs the grid and refits the winner") {
    const FeatureArtifacts& art = shared_features();
    const FeatureTable fused = select_view(art.table, FeatureView::Fused);
    const std::vector<PipelineConfig> candidates = {knn_candidate(FeatureView::Fused, 1),
                                                    knn_candidate(FeatureView::Fused, 5)};
    ModelOutcome out = evaluate_model(art, fused, candidates, 3, 3);
    REQUIRE(out.grid.has_value());
    CHECK(out.grid->table.size() == 2);
    const auto& winner = out.grid->table[out.grid->winner];
    CHECK(out.config.classifier.knn.n_neighbors == winner.config.classifier.knn.n_neighbors);
    CHECK(out.pipeline.fold_scores == winner.fold_scores);
    CHECK(out.pipeline.fold_scores.size() == 3);

    CHECK_THROWS_AS(evaluate_model(art, fused, {}, 3, 3), Error);
}

TEST_CASE("an experiment covers every view and family slot and compares them") {
    const FeatureArtifacts& art = shared_features();
    RunConfig config;
    config.families = {ClassifierFamily::KNN};
    config.seed = 9;
    ExperimentResult result = run_experiment_data(art, config);

    REQUIRE(result.outcomes.size() == 2); // network and fused
    CHECK(result.outcomes[0].config.view == FeatureView::Network);
    CHECK(result.outcomes[1].config.view == FeatureView::Fused);
    for (const auto& o : result.outcomes) {
        CHECK(o.raw.size() == art.split.test_rows.size());
        CHECK(o.cm_raw.total() == static_cast<std::int64_t>(o.raw.size()));
    }
    REQUIRE(result.comparison.rows.size() == 1);
    CHECK(result.comparison.rows[0].model == "knn");
    CHECK(result.comparison.rows[0].network_macro.has_value());
    CHECK(result.comparison.rows[0].fused_macro.has_value());
    CHECK(result.comparison.rows[0].delta.has_value());
    CHECK(result.comparison.mean_delta.has_value());

    // the run is reproducible end to end
    ExperimentResult again = run_experiment_data(art, config);
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
        CHECK(again.outcomes[i].raw == result.outcomes[i].raw);
        CHECK(again.outcomes[i].f1_raw.macro == result.outcomes[i].f1_raw.macro);
    }
}

TEST_CASE("experiment outputs land in the documented directory layout") {
    const FeatureArtifacts& art = shared_features();
    RunConfig config;
    config.families = {ClassifierFamily::KNN};
    config.seed = 9;
    ExperimentResult result = run_experiment_data(art, config);

    TempDir dir("expdir");
    write_experiment(result, config, dir.str());
    CHECK(fs::exists(dir.path / "comparison.csv"));
    CHECK(fs::exists(dir.path / "run_config.json"));
    for (const char* view : {"network", "fused"}) {
        const fs::path model_dir = dir.path / view / "knn";
        for (const char* leaf : {"report.json", "pipeline.json", "input_columns.json",
                                 "confusion_raw.csv", "confusion_filtered.csv", "timeline.csv"})
            CHECK(fs::exists(model_dir / leaf));
        // a single default candidate means no grid table
        CHECK(!fs::exists(model_dir / "grid.csv"));

        const nlohmann::json report = nlohmann::json::parse(slurp(model_dir / "report.json"));
        CHECK(report.at("test_rows").get<std::size_t>() == art.split.test_rows.size());
        CHECK(report.at("f1").contains("raw"));
        CHECK(report.at("f1").contains("filtered"));
        CHECK(report.at("delay").at("raw").contains("events"));
        CHECK(report.at("fold_scores").is_array());
        CHECK(report.at("config").at("view").get<std::string>() == view);

        const nlohmann::json cols = nlohmann::json::parse(slurp(model_dir / "input_columns.json"));
        CHECK(cols.at("format") == "cpids.columns");
        CHECK(cols.at("version") == 1);
        CHECK(!cols.at("columns").empty());
    }
    const std::string comparison = slurp(dir.path / "comparison.csv");
    CHECK(comparison.rfind("model,network_macro_f1,fused_macro_f1,delta\n", 0) == 0);
    CHECK(comparison.find("\nmean,,,") != std::string::npos);
}

TEST_CASE("prediction on the training capture reproduces the experiment's outputs") {
    const SynthData& d = shared_data();
    const FeatureArtifacts& art = shared_features();
    const FeatureTable fused = select_view(art.table, FeatureView::Fused);
    ModelOutcome out = evaluate_model(art, fused, {knn_candidate(FeatureView::Fused)}, 5, 3);

    PredictResult pred =
        predict_data(d.packets, d.physical, art.vocab, art.cycle, out.pipeline, out.input_columns);
    CHECK(pred.ts.size() == 600);
    CHECK(pred.raw.size() == pred.ts.size());
    CHECK(pred.filtered.size() == pred.ts.size());
    CHECK(pred.filtered == filter_sequence(pred.raw, out.pipeline.config.filter_window));

    // at held-out seconds the fresh pass agrees with the stored run
    std::map<double, EventLabel> by_ts;
    for (std::size_t i = 0; i < pred.ts.size(); ++i) by_ts[pred.ts[i]] = pred.raw[i];
    for (std::size_t i = 0; i < out.test_ts.size(); ++i) {
        REQUIRE(by_ts.count(out.test_ts[i]) == 1);
        CHECK(by_ts[out.test_ts[i]] == out.raw[i]);
    }
}

TEST_CASE("the file-driven stages chain together") {
    const SynthData& d = shared_data();
    TempDir dir("chain");
    csv::write_text_atomic(dir.str("packets.csv"), serialize_packets(d.packets));
    csv::write_text_atomic(dir.str("physical.csv"), serialize_physical(d.physical));
    csv::write_text_atomic(dir.str("labels.csv"), serialize_labels(d.spans));

    RunConfig config;
    config.packets_path = dir.str("packets.csv");
    config.physical_path = dir.str("physical.csv");
    config.labels_path = dir.str("labels.csv");
    config.features_dir = dir.str("features");
    run_features(config);

    FeatureArtifacts loaded = load_features(config.features_dir);
    const FeatureArtifacts& direct = shared_features();
    CHECK(serialize_table_csv(loaded.table) == serialize_table_csv(direct.table));
    CHECK(serialize_split(loaded.split) == serialize_split(direct.split));

    config.out_dir = dir.str("out");
    config.families = {ClassifierFamily::KNN};
    run_experiment(config);
    CHECK(fs::exists(dir.path / "out" / "comparison.csv"));
    CHECK(fs::exists(dir.path / "out" / "fused" / "knn" / "report.json"));

    // predict from the written model directory
    config.model_dir = dir.str("out/fused/knn");
    config.out_dir = dir.str("pred");
    run_predict(config);
    const std::string predictions = slurp(dir.path / "pred" / "predictions.csv");
    CHECK(predictions.rfind("ts,raw,filtered\n", 0) == 0);
    // header plus one row per second
    CHECK(std::count(predictions.begin(), predictions.end(), '\n') == 601);
}
