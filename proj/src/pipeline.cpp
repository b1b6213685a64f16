#include "cpids/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/evaluate.hpp"
#include "cpids/partition.hpp"
#include "cpids/rng.hpp"

namespace cpids {

void validate_config(const PipelineConfig& config) {
    if (config.undersampler != ResamplerKind::None && config.undersampler != ResamplerKind::Tomek &&
        config.undersampler != ResamplerKind::Iht)
        raise(errc::invalid_config, "undersampler must be none, tomek or iht");
    if (config.oversampler != ResamplerKind::None && config.oversampler != ResamplerKind::Smote &&
        config.oversampler != ResamplerKind::BorderlineSmote)
        raise(errc::invalid_config, "oversampler must be none, smote or borderline_smote");
    if (config.classifier.family == ClassifierFamily::SVM && config.scaler == ScalerKind::None)
        raise(errc::invalid_config,
              "an RBF SVM on unscaled features is rejected; pick a scaler (standardize, minmax01 or maxabs)");
    if (config.filter_window == 0) raise(errc::invalid_config, "filter window must be at least 1");
}

namespace {

std::vector<double> subset_ts(const std::vector<double>* row_ts, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    if (!row_ts) return out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back((*row_ts)[r]);
    return out;
}

} // namespace

TrainedPipeline fit_pipeline(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                             const PipelineConfig& config, std::uint64_t seed, AuditLog* audit,
                             const std::vector<double>* row_ts) {
    validate_config(config);
    if (row_ts && row_ts->size() != y.size())
        raise(errc::length_mismatch, "fit_pipeline: row timestamps do not parallel the rows");
    const std::string tag = config.name.empty() ? family_name(config.classifier.family) : config.name;
    auto record = [&](const char* step) {
        if (audit && row_ts) audit->record_fit(tag + "." + step, *row_ts);
    };
    Rng root(seed);

    TrainedPipeline out;
    out.config = config;
    out.seed = seed;

    out.scaler = fit_scaler(X, config.scaler);
    if (config.scaler != ScalerKind::None) record("scaler");
    Eigen::MatrixXd Xs = apply_scaler(out.scaler, X);

    if (config.pca) {
        out.pca = fit_pca(Xs);
        record("pca");
        Xs = apply_pca(*out.pca, Xs);
    }

    std::vector<EventLabel> labels = y;
    if (config.undersampler != ResamplerKind::None) {
        ResampleResult r = resample(Xs, labels, config.undersampler, root.fork(2).next_u64(),
                                    config.resample_opts);
        record("undersampler");
        Xs = std::move(r.rows);
        labels = std::move(r.labels);
    }
    if (config.oversampler != ResamplerKind::None) {
        ResampleResult r = resample(Xs, labels, config.oversampler, root.fork(3).next_u64(),
                                    config.resample_opts);
        record("oversampler");
        Xs = std::move(r.rows);
        labels = std::move(r.labels);
    }

    out.classifier = train_classifier(Xs, labels, config.classifier, root.fork(4).next_u64());
    record("classifier");
    return out;
}

namespace {

Eigen::MatrixXd transform_rows(const TrainedPipeline& pipeline, const Eigen::MatrixXd& rows) {
    Eigen::MatrixXd X = apply_scaler(pipeline.scaler, rows);
    if (pipeline.pca) X = apply_pca(*pipeline.pca, X);
    return X;
}

} // namespace

std::vector<EventLabel> predict_pipeline(const TrainedPipeline& pipeline, const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) return {};
    return classifier_predict(pipeline.classifier, transform_rows(pipeline, rows));
}

Eigen::MatrixXd pipeline_scores(const TrainedPipeline& pipeline, const Eigen::MatrixXd& rows) {
    return classifier_scores(pipeline.classifier, transform_rows(pipeline, rows));
}

namespace {

std::size_t step_count(const PipelineConfig& c) {
    std::size_t steps = 1; // the classifier itself
    if (c.scaler != ScalerKind::None) ++steps;
    if (c.pca) ++steps;
    if (c.undersampler != ResamplerKind::None) ++steps;
    if (c.oversampler != ResamplerKind::None) ++steps;
    return steps;
}

// Rough cross-family capacity proxy for the documented parsimony tie-break.
std::size_t model_size_proxy(const ClassifierSpec& spec) {
    switch (spec.family) {
    case ClassifierFamily::RF: return spec.rf.n_estimators;
    case ClassifierFamily::KNN: return spec.knn.n_neighbors;
    case ClassifierFamily::SVM: return 100;
    case ClassifierFamily::ANN:
        return std::accumulate(spec.ann.hidden.begin(), spec.ann.hidden.end(), std::size_t{0});
    }
    return 0;
}

} // namespace

GridSearchResult grid_search(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                             const std::vector<PipelineConfig>& grid, std::size_t k, std::uint64_t seed,
                             AuditLog* audit, const std::vector<double>* row_ts) {
    if (grid.empty()) raise(errc::empty_grid, "the candidate grid is empty");
    std::vector<std::size_t> all(y.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng root(seed);
    const auto folds = stratified_shuffled_folds(y, all, k, root.fork(0).next_u64());

    GridSearchResult result;
    result.table.reserve(grid.size());
    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        CandidateResult cand;
        cand.config = grid[ci];
        for (std::size_t fi = 0; fi < folds.size(); ++fi) {
            std::vector<std::size_t> train_rows;
            for (std::size_t g = 0; g < folds.size(); ++g)
                if (g != fi) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
            std::sort(train_rows.begin(), train_rows.end());

            Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
            std::vector<EventLabel> ytr;
            ytr.reserve(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i) {
                Xtr.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(train_rows[i]));
                ytr.push_back(y[train_rows[i]]);
            }
            Eigen::MatrixXd Xval(static_cast<Eigen::Index>(folds[fi].size()), X.cols());
            std::vector<EventLabel> yval;
            yval.reserve(folds[fi].size());
            for (std::size_t i = 0; i < folds[fi].size(); ++i) {
                Xval.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(folds[fi][i]));
                yval.push_back(y[folds[fi][i]]);
            }

            double score = 0.0;
            try {
                PipelineConfig fold_config = grid[ci];
                if (fold_config.name.empty()) fold_config.name = family_name(fold_config.classifier.family);
                fold_config.name = "cv." + fold_config.name + ".candidate" + std::to_string(ci) + ".fold" +
                                   std::to_string(fi);
                const std::vector<double> fold_ts = subset_ts(row_ts, train_rows);
                const TrainedPipeline p =
                    fit_pipeline(Xtr, ytr, fold_config, root.fork(1 + ci * 131 + fi).next_u64(), audit,
                                 row_ts ? &fold_ts : nullptr);
                const std::vector<EventLabel> pred = predict_pipeline(p, Xval);
                score = f1_scores(confusion(yval, pred)).macro;
            } catch (const Error& e) {
                cand.failures.push_back("fold " + std::to_string(fi) + ": " + e.what());
                score = 0.0; // a failing candidate scores zero on that fold
            }
            cand.fold_scores.push_back(score);
        }
        double mean = 0.0;
        for (double s : cand.fold_scores) mean += s;
        mean /= static_cast<double>(cand.fold_scores.size());
        double var = 0.0;
        for (double s : cand.fold_scores) var += (s - mean) * (s - mean);
        var /= static_cast<double>(cand.fold_scores.size());
        cand.mean_score = mean;
        cand.stdev = std::sqrt(var);
        result.table.push_back(std::move(cand));
    }

    result.winner = 0;
    for (std::size_t ci = 1; ci < result.table.size(); ++ci) {
        const CandidateResult& a = result.table[ci];
        const CandidateResult& b = result.table[result.winner];
        if (a.mean_score > b.mean_score) {
            result.winner = ci;
        } else if (a.mean_score == b.mean_score) {
            const auto key_a = std::make_pair(step_count(a.config), model_size_proxy(a.config.classifier));
            const auto key_b = std::make_pair(step_count(b.config), model_size_proxy(b.config.classifier));
            if (key_a < key_b) result.winner = ci;
        }
    }
    return result;
}

std::string serialize_grid_table(const GridSearchResult& result) {
    std::ostringstream os;
    os << "candidate,name,view,scaler,pca,undersampler,oversampler,family,mean_macro_f1,stdev,fold_scores,"
          "failures\n";
    for (std::size_t ci = 0; ci < result.table.size(); ++ci) {
        const CandidateResult& c = result.table[ci];
        os << ci << ',' << (c.config.name.empty() ? family_name(c.config.classifier.family) : c.config.name)
           << ',' << view_name(c.config.view) << ',' << scaler_name(c.config.scaler) << ','
           << (c.config.pca ? "pca" : "none") << ',' << resampler_name(c.config.undersampler) << ','
           << resampler_name(c.config.oversampler) << ',' << family_name(c.config.classifier.family) << ','
           << csv::format_double(c.mean_score) << ',' << csv::format_double(c.stdev) << ',';
        for (std::size_t i = 0; i < c.fold_scores.size(); ++i) {
            if (i) os << ' ';
            os << csv::format_double(c.fold_scores[i]);
        }
        os << ',' << c.failures.size() << '\n';
    }
    os << "winner," << result.winner << '\n';
    return os.str();
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& config) {
    nlohmann::json j;
    j["name"] = config.name;
    j["view"] = view_name(config.view);
    j["scaler"] = scaler_name(config.scaler);
    j["pca"] = config.pca;
    j["undersampler"] = resampler_name(config.undersampler);
    j["oversampler"] = resampler_name(config.oversampler);
    j["filter"] = config.filter;
    j["filter_window"] = config.filter_window;
    j["resample"] = {{"k_neighbors", config.resample_opts.k_neighbors},
                     {"iht_estimators", config.resample_opts.iht_estimators},
                     {"iht_folds", config.resample_opts.iht_folds}};
    nlohmann::json c;
    c["family"] = family_name(config.classifier.family);
    switch (config.classifier.family) {
    case ClassifierFamily::RF:
        c["n_estimators"] = config.classifier.rf.n_estimators;
        c["n_max_features"] = config.classifier.rf.n_max_features;
        break;
    case ClassifierFamily::KNN:
        c["n_neighbors"] = config.classifier.knn.n_neighbors;
        c["metric"] = knn_metric_name(config.classifier.knn.metric);
        c["weighting"] = knn_weighting_name(config.classifier.knn.weighting);
        break;
    case ClassifierFamily::SVM:
        c["C"] = config.classifier.svm.C;
        c["gamma"] = config.classifier.svm.gamma;
        c["tol"] = config.classifier.svm.tol;
        break;
    case ClassifierFamily::ANN:
        c["hidden"] = config.classifier.ann.hidden;
        c["dropout"] = config.classifier.ann.dropout;
        c["epochs"] = config.classifier.ann.epochs;
        c["batch_size"] = config.classifier.ann.batch_size;
        c["learning_rate"] = config.classifier.ann.learning_rate;
        break;
    }
    j["classifier"] = std::move(c);
    return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig config;
    config.name = j.value("name", "");
    config.view = parse_view(j.value("view", "fused"));
    config.scaler = parse_scaler(j.value("scaler", "none"));
    config.pca = j.value("pca", false);
    config.undersampler = parse_resampler(j.value("undersampler", "none"));
    config.oversampler = parse_resampler(j.value("oversampler", "none"));
    config.filter = j.value("filter", true);
    config.filter_window = j.value("filter_window", std::size_t{6});
    if (j.contains("resample")) {
        const auto& r = j.at("resample");
        config.resample_opts.k_neighbors = r.value("k_neighbors", std::size_t{5});
        config.resample_opts.iht_estimators = r.value("iht_estimators", std::size_t{50});
        config.resample_opts.iht_folds = r.value("iht_folds", std::size_t{3});
    }
    const auto& c = j.at("classifier");
    config.classifier.family = parse_family(c.at("family").get<std::string>());
    switch (config.classifier.family) {
    case ClassifierFamily::RF:
        config.classifier.rf.n_estimators = c.value("n_estimators", std::size_t{100});
        config.classifier.rf.n_max_features = c.value("n_max_features", std::size_t{0});
        break;
    case ClassifierFamily::KNN:
        config.classifier.knn.n_neighbors = c.value("n_neighbors", std::size_t{5});
        config.classifier.knn.metric = parse_knn_metric(c.value("metric", "manhattan"));
        config.classifier.knn.weighting = parse_knn_weighting(c.value("weighting", "uniform"));
        break;
    case ClassifierFamily::SVM:
        config.classifier.svm.C = c.value("C", 1.0);
        config.classifier.svm.gamma = c.value("gamma", 0.1);
        config.classifier.svm.tol = c.value("tol", 1e-3);
        break;
    case ClassifierFamily::ANN:
        config.classifier.ann.hidden = c.value("hidden", std::vector<std::size_t>{150, 150});
        config.classifier.ann.dropout = c.value("dropout", 0.5);
        config.classifier.ann.epochs = c.value("epochs", std::size_t{500});
        config.classifier.ann.batch_size = c.value("batch_size", std::size_t{512});
        config.classifier.ann.learning_rate = c.value("learning_rate", 1e-3);
        break;
    }
    return config;
}

std::string serialize_pipeline(const TrainedPipeline& pipeline) {
    nlohmann::json j;
    j["format"] = "cpids.pipeline";
    j["version"] = 1;
    j["config"] = pipeline_config_to_json(pipeline.config);
    j["scaler"] = scaler_to_json(pipeline.scaler);
    j["pca"] = pipeline.pca ? pca_to_json(*pipeline.pca) : nlohmann::json(nullptr);
    j["classifier"] = classifier_to_json(pipeline.classifier);
    j["seed"] = pipeline.seed;
    j["fold_scores"] = pipeline.fold_scores;
    return j.dump() + "\n";
}

TrainedPipeline deserialize_pipeline(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != "cpids.pipeline")
        raise(errc::bundle_version_mismatch, "not a cpids.pipeline bundle");
    if (j.value("version", 0) != 1)
        raise(errc::bundle_version_mismatch,
              "unsupported cpids.pipeline bundle version " + std::to_string(j.value("version", 0)));
    TrainedPipeline p;
    p.config = pipeline_config_from_json(j.at("config"));
    p.scaler = scaler_from_json(j.at("scaler"));
    if (!j.at("pca").is_null()) p.pca = pca_from_json(j.at("pca"));
    p.classifier = classifier_from_json(j.at("classifier"));
    p.seed = j.at("seed").get<std::uint64_t>();
    p.fold_scores = j.value("fold_scores", std::vector<double>{});
    return p;
}

} // namespace cpids
