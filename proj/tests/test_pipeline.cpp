#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpids/errors.hpp"
#include "cpids/partition.hpp"
#include "cpids/pipeline.hpp"
#include "cpids/rng.hpp"

using namespace cpids;

namespace {

struct Fixture {
    Eigen::MatrixXd X;
    std::vector<EventLabel> y;
    std::vector<double> ts;
};

// well-separated blobs; counts chosen so 3-fold splits stay balanced
Fixture blobs(std::size_t n_normal, std::size_t n_dos, std::size_t n_scan = 0,
              std::uint64_t seed = 4) {
    Rng rng(seed);
    Fixture f;
    const std::size_t total = n_normal + n_dos + n_scan;
    f.X.resize(static_cast<Eigen::Index>(total), 2);
    auto emit = [&](std::size_t row, double cx, double cy, EventLabel label) {
        f.X(static_cast<Eigen::Index>(row), 0) = cx + rng.next_gauss() * 0.3;
        f.X(static_cast<Eigen::Index>(row), 1) = cy + rng.next_gauss() * 0.3;
        f.y.push_back(label);
        f.ts.push_back(1000.0 + static_cast<double>(row));
    };
    std::size_t row = 0;
    for (std::size_t i = 0; i < n_normal; ++i) emit(row++, 0.0, 0.0, EventLabel::Normal);
    for (std::size_t i = 0; i < n_dos; ++i) emit(row++, 8.0, 0.0, EventLabel::DoS);
    for (std::size_t i = 0; i < n_scan; ++i) emit(row++, 0.0, 8.0, EventLabel::Scanning);
    return f;
}

PipelineConfig knn_config() {
    PipelineConfig c;
    c.classifier.family = ClassifierFamily::KNN;
    c.classifier.knn.n_neighbors = 1;
    return c;
}

} // namespace

TEST_CASE("a pipeline with every step bypassed is exactly the bare classifier") {
    auto f = blobs(40, 20);
    PipelineConfig config = knn_config();
    config.classifier.knn.n_neighbors = 3;
    auto pipeline = fit_pipeline(f.X, f.y, config, 5);

    auto bare = train_knn(f.X, f.y, config.classifier.knn);
    auto probe = blobs(10, 10, 0, 9).X;
    CHECK(predict_pipeline(pipeline, probe) == knn_predict(bare, probe));
    CHECK(!pipeline.pca.has_value());
    CHECK(pipeline.scaler.kind == ScalerKind::None);
}

TEST_CASE("the full stack trains end to end on an imbalanced problem") {
    // scale -> oversample -> RBF SVM, the shape of the strongest default
    auto f = blobs(40, 12);
    PipelineConfig config;
    config.scaler = ScalerKind::MaxAbs;
    config.oversampler = ResamplerKind::BorderlineSmote;
    config.classifier.family = ClassifierFamily::SVM;
    config.classifier.svm.C = 10000.0;
    config.classifier.svm.gamma = 0.0175;
    auto pipeline = fit_pipeline(f.X, f.y, config, 5);
    CHECK(predict_pipeline(pipeline, f.X) == f.y);

    // scale -> pca -> classifier also runs and records the projection
    PipelineConfig with_pca = knn_config();
    with_pca.scaler = ScalerKind::Standardize;
    with_pca.pca = true;
    auto p2 = fit_pipeline(f.X, f.y, with_pca, 5);
    CHECK(p2.pca.has_value());
    CHECK(predict_pipeline(p2, f.X) == f.y);
}

TEST_CASE("configuration validation rejects unscaled svm and inverted resampler roles") {
    PipelineConfig config;
    config.classifier.family = ClassifierFamily::SVM;
    config.scaler = ScalerKind::None;
    CHECK_THROWS_AS(validate_config(config), Error);
    try {
        auto f = blobs(10, 10);
        fit_pipeline(f.X, f.y, config, 0);
        FAIL("expected invalid_config");
    } catch (const Error& e) {
        CHECK(e.code() == errc::invalid_config);
    }

    PipelineConfig swapped = knn_config();
    swapped.undersampler = ResamplerKind::Smote; // an oversampler in the wrong slot
    CHECK_THROWS_AS(validate_config(swapped), Error);
    PipelineConfig swapped2 = knn_config();
    swapped2.oversampler = ResamplerKind::Tomek;
    CHECK_THROWS_AS(validate_config(swapped2), Error);

    PipelineConfig no_window = knn_config();
    no_window.filter_window = 0;
    CHECK_THROWS_AS(validate_config(no_window), Error);
}

TEST_CASE("batch prediction equals row-at-a-time prediction") {
    auto f = blobs(30, 15);
    PipelineConfig config = knn_config();
    config.scaler = ScalerKind::Standardize;
    config.pca = true;
    auto pipeline = fit_pipeline(f.X, f.y, config, 2);

    auto probe = blobs(8, 8, 0, 31).X;
    auto batch = predict_pipeline(pipeline, probe);
    Eigen::MatrixXd batch_scores = pipeline_scores(pipeline, probe);
    for (Eigen::Index r = 0; r < probe.rows(); ++r) {
        Eigen::MatrixXd one = probe.row(r);
        auto single = predict_pipeline(pipeline, one);
        REQUIRE(single.size() == 1);
        CHECK(single[0] == batch[static_cast<std::size_t>(r)]);
        Eigen::MatrixXd s = pipeline_scores(pipeline, one);
        CHECK((s.row(0) - batch_scores.row(r)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("a single-candidate grid returns that candidate as winner") {
    auto f = blobs(60, 27);
    GridSearchResult result = grid_search(f.X, f.y, {knn_config()}, 3, 11);
    REQUIRE(result.table.size() == 1);
    CHECK(result.winner == 0);
    CHECK(result.table[0].fold_scores.size() == 3);
    // two perfectly separated classes of the five-class universe: macro 2/5
    CHECK(result.table[0].mean_score == doctest::Approx(0.4));
    CHECK(result.table[0].failures.empty());

    const std::string table = serialize_grid_table(result);
    CHECK(table.find("mean_macro_f1") != std::string::npos);
    CHECK(table.find("winner,0") != std::string::npos);

    CHECK_THROWS_AS(grid_search(f.X, f.y, {}, 3, 11), Error);
}

TEST_CASE("a majority-vote degenerate candidate loses to a real one") {
    auto f = blobs(60, 27, 3);
    // candidate 0 sees every training row as neighbor -> constant majority
    PipelineConfig degenerate = knn_config();
    degenerate.classifier.knn.n_neighbors = 60; // == fold-train size at k=3
    PipelineConfig real = knn_config();
    GridSearchResult result = grid_search(f.X, f.y, {degenerate, real}, 3, 11);
    CHECK(result.winner == 1);
    CHECK(result.table[1].mean_score > result.table[0].mean_score);
}

TEST_CASE("grid search is reproducible under a fixed seed") {
    auto f = blobs(60, 27);
    PipelineConfig rf;
    rf.classifier.family = ClassifierFamily::RF;
    rf.classifier.rf.n_estimators = 20;
    auto a = grid_search(f.X, f.y, {rf, knn_config()}, 3, 21);
    auto b = grid_search(f.X, f.y, {rf, knn_config()}, 3, 21);
    CHECK(a.winner == b.winner);
    for (std::size_t ci = 0; ci < a.table.size(); ++ci)
        CHECK(a.table[ci].fold_scores == b.table[ci].fold_scores);

    // and a full refit with the same seed is byte-identical
    auto p1 = fit_pipeline(f.X, f.y, rf, 33);
    auto p2 = fit_pipeline(f.X, f.y, rf, 33);
    CHECK(serialize_pipeline(p1) == serialize_pipeline(p2));
    auto p3 = fit_pipeline(f.X, f.y, rf, 34);
    CHECK(serialize_pipeline(p1) != serialize_pipeline(p3));
}

TEST_CASE("cross-validation never lets a fold's own rows into its fits") {
    auto f = blobs(60, 27);
    PipelineConfig config = knn_config();
    config.scaler = ScalerKind::Standardize;
    config.pca = true;
    config.undersampler = ResamplerKind::Tomek;
    config.oversampler = ResamplerKind::Smote;

    const std::size_t k = 3;
    const std::uint64_t seed = 77;
    AuditLog audit;
    grid_search(f.X, f.y, {config}, k, seed, &audit, &f.ts);

    // reconstruct the fold assignment the search used
    std::vector<std::size_t> all(f.y.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng root(seed);
    const auto folds = stratified_shuffled_folds(f.y, all, k, root.fork(0).next_u64());

    // 5 fitted steps per fold
    CHECK(audit.events().size() == 5 * k);
    for (const auto& event : audit.events()) {
        const auto pos = event.component.find(".fold");
        REQUIRE(pos != std::string::npos);
        const std::size_t fi = static_cast<std::size_t>(std::stoul(event.component.substr(pos + 5)));
        REQUIRE(fi < k);

        std::set<double> held_out;
        for (std::size_t r : folds[fi]) held_out.insert(f.ts[r]);
        for (double t : event.row_ts) CHECK(held_out.count(t) == 0);

        // the fit saw exactly the complementary rows
        std::vector<double> expected;
        for (std::size_t g = 0; g < k; ++g)
            if (g != fi)
                for (std::size_t r : folds[g]) expected.push_back(f.ts[r]);
        std::sort(expected.begin(), expected.end());
        std::vector<double> got = event.row_ts;
        std::sort(got.begin(), got.end());
        CHECK(got == expected);
    }
}

TEST_CASE("a candidate failing inside folds scores zero without aborting the search") {
    auto f = blobs(60, 27, 3); // 3 Scanning rows: too few to oversample in folds
    PipelineConfig fragile = knn_config();
    fragile.oversampler = ResamplerKind::Smote;
    PipelineConfig sturdy = knn_config();
    GridSearchResult result = grid_search(f.X, f.y, {fragile, sturdy}, 3, 15);
    CHECK(result.winner == 1);
    CHECK(result.table[0].failures.size() == 3);
    CHECK(result.table[0].mean_score == 0.0);
    for (double s : result.table[0].fold_scores) CHECK(s == 0.0);
    CHECK(result.table[1].failures.empty());
    CHECK(serialize_grid_table(result).find("winner,1") != std::string::npos);
}

TEST_CASE("trained pipelines round-trip through their bundle format") {
    auto f = blobs(30, 15);
    PipelineConfig config;
    config.name = "probe";
    config.scaler = ScalerKind::MaxAbs;
    config.pca = true;
    config.oversampler = ResamplerKind::Smote;
    config.classifier.family = ClassifierFamily::RF;
    config.classifier.rf.n_estimators = 15;
    auto pipeline = fit_pipeline(f.X, f.y, config, 8);
    pipeline.fold_scores = {0.5, 0.75};

    const std::string text = serialize_pipeline(pipeline);
    auto back = deserialize_pipeline(text);
    CHECK(back.config.name == "probe");
    CHECK(back.config.scaler == ScalerKind::MaxAbs);
    CHECK(back.config.pca == true);
    CHECK(back.seed == 8);
    CHECK(back.fold_scores == pipeline.fold_scores);
    auto probe = blobs(6, 6, 0, 77).X;
    CHECK(predict_pipeline(back, probe) == predict_pipeline(pipeline, probe));
    CHECK(serialize_pipeline(back) == text);
}

TEST_CASE("pipeline bundles fail closed on foreign or future content") {
    auto f = blobs(20, 10);
    const std::string good = serialize_pipeline(fit_pipeline(f.X, f.y, knn_config(), 1));

    std::string future = good;
    const std::string v1 = "\"version\":1";
    const auto pos = future.find(v1);
    REQUIRE(pos != std::string::npos);
    future.replace(pos, v1.size(), "\"version\":2");
    try {
        deserialize_pipeline(future);
        FAIL("expected bundle_version_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == errc::bundle_version_mismatch);
    }

    std::string foreign = good;
    const std::string fmt = "cpids.pipeline";
    foreign.replace(foreign.find(fmt), fmt.size(), "cpids.somethingelse");
    CHECK_THROWS_AS(deserialize_pipeline(foreign), Error);
    CHECK_THROWS_AS(deserialize_pipeline("not json at all"), Error);
    CHECK_THROWS_AS(deserialize_pipeline("[1,2,3]"), Error);
}

TEST_CASE("pipeline configurations survive json round-trips for every family") {
    PipelineConfig rf;
    rf.name = "fused.rf";
    rf.view = FeatureView::Fused;
    rf.scaler = ScalerKind::Standardize;
    rf.oversampler = ResamplerKind::Smote;
    rf.classifier.family = ClassifierFamily::RF;
    rf.classifier.rf.n_estimators = 100;
    rf.classifier.rf.n_max_features = 17;

    PipelineConfig knn;
    knn.name = "network.knn";
    knn.view = FeatureView::Network;
    knn.scaler = ScalerKind::Standardize;
    knn.pca = true;
    knn.undersampler = ResamplerKind::Tomek;
    knn.classifier.family = ClassifierFamily::KNN;
    knn.classifier.knn.n_neighbors = 5;
    knn.classifier.knn.metric = KnnMetric::Manhattan;
    knn.classifier.knn.weighting = KnnWeighting::Distance;

    PipelineConfig svm;
    svm.name = "fused.svm";
    svm.scaler = ScalerKind::MaxAbs;
    svm.oversampler = ResamplerKind::BorderlineSmote;
    svm.classifier.family = ClassifierFamily::SVM;
    svm.classifier.svm.C = 10000.0;
    svm.classifier.svm.gamma = 0.0175;

    PipelineConfig ann;
    ann.name = "fused.ann";
    ann.scaler = ScalerKind::MaxAbs;
    ann.pca = true;
    ann.oversampler = ResamplerKind::BorderlineSmote;
    ann.classifier.family = ClassifierFamily::ANN;
    ann.classifier.ann.hidden = {150, 150};
    ann.classifier.ann.dropout = 0.5;
    ann.classifier.ann.epochs = 500;
    ann.classifier.ann.batch_size = 512;
    ann.filter_window = 9;

    for (const PipelineConfig& config : {rf, knn, svm, ann}) {
        auto j = pipeline_config_to_json(config);
        PipelineConfig back = pipeline_config_from_json(j);
        CHECK(back.name == config.name);
        CHECK(back.view == config.view);
        CHECK(back.scaler == config.scaler);
        CHECK(back.pca == config.pca);
        CHECK(back.undersampler == config.undersampler);
        CHECK(back.oversampler == config.oversampler);
        CHECK(back.filter == config.filter);
        CHECK(back.filter_window == config.filter_window);
        CHECK(back.classifier.family == config.classifier.family);
        switch (config.classifier.family) {
        case ClassifierFamily::RF:
            CHECK(back.classifier.rf.n_estimators == config.classifier.rf.n_estimators);
            CHECK(back.classifier.rf.n_max_features == config.classifier.rf.n_max_features);
            break;
        case ClassifierFamily::KNN:
            CHECK(back.classifier.knn.n_neighbors == config.classifier.knn.n_neighbors);
            CHECK(back.classifier.knn.metric == config.classifier.knn.metric);
            CHECK(back.classifier.knn.weighting == config.classifier.knn.weighting);
            break;
        case ClassifierFamily::SVM:
            CHECK(back.classifier.svm.C == config.classifier.svm.C);
            CHECK(back.classifier.svm.gamma == config.classifier.svm.gamma);
            break;
        case ClassifierFamily::ANN:
            CHECK(back.classifier.ann.hidden == config.classifier.ann.hidden);
            CHECK(back.classifier.ann.dropout == config.classifier.ann.dropout);
            CHECK(back.classifier.ann.epochs == config.classifier.ann.epochs);
            CHECK(back.classifier.ann.batch_size == config.classifier.ann.batch_size);
            break;
        }
    }
}

TEST_CASE("row timestamps must parallel the training rows") {
    auto f = blobs(10, 10);
    std::vector<double> short_ts(f.ts.begin(), f.ts.end() - 1);
    AuditLog audit;
    try {
        fit_pipeline(f.X, f.y, knn_config(), 0, &audit, &short_ts);
        FAIL("expected length_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == errc::length_mismatch);
    }
}
