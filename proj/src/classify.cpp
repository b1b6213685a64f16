#include "cpids/classify.hpp"

#include <nlohmann/json.hpp>

#include <set>

#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"
#include "cpids/rng.hpp"

namespace cpids {

ClassifierFamily parse_family(const std::string& name) {
    if (name == "rf") return ClassifierFamily::RF;
    if (name == "knn") return ClassifierFamily::KNN;
    if (name == "svm") return ClassifierFamily::SVM;
    if (name == "ann") return ClassifierFamily::ANN;
    raise(errc::invalid_config, "unknown classifier family '" + name + "' (expected rf, knn, svm or ann)");
}

const char* family_name(ClassifierFamily family) {
    switch (family) {
    case ClassifierFamily::RF: return "rf";
    case ClassifierFamily::KNN: return "knn";
    case ClassifierFamily::SVM: return "svm";
    case ClassifierFamily::ANN: return "ann";
    }
    return "?";
}

TrainedClassifier train_classifier(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                                   const ClassifierSpec& spec, std::uint64_t seed) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        raise(errc::length_mismatch,
              "classifier: " + std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
    std::set<EventLabel> classes(y.begin(), y.end());
    if (classes.size() < 2)
        raise(errc::single_class, "training data contains " + std::to_string(classes.size()) +
                                      " class(es); need at least 2");

    TrainedClassifier model;
    model.family = spec.family;
    model.classes.assign(classes.begin(), classes.end());
    model.seed = seed;
    Rng rng(seed);
    switch (spec.family) {
    case ClassifierFamily::RF: model.rf = train_forest(X, y, spec.rf, rng); break;
    case ClassifierFamily::KNN: model.knn = train_knn(X, y, spec.knn); break;
    case ClassifierFamily::SVM: model.svm = train_svm(X, y, spec.svm); break;
    case ClassifierFamily::ANN: model.ann = train_ann(X, y, spec.ann, rng); break;
    }
    return model;
}

std::vector<EventLabel> classifier_predict(const TrainedClassifier& model, const Eigen::MatrixXd& rows) {
    switch (model.family) {
    case ClassifierFamily::RF: return forest_predict(*model.rf, rows);
    case ClassifierFamily::KNN: return knn_predict(*model.knn, rows);
    case ClassifierFamily::SVM: return svm_predict(*model.svm, rows);
    case ClassifierFamily::ANN: return ann_predict(*model.ann, rows);
    }
    return {};
}

Eigen::MatrixXd classifier_scores(const TrainedClassifier& model, const Eigen::MatrixXd& rows) {
    switch (model.family) {
    case ClassifierFamily::RF: return forest_scores(*model.rf, rows);
    case ClassifierFamily::KNN: return knn_scores(*model.knn, rows);
    case ClassifierFamily::SVM: return svm_scores(*model.svm, rows);
    case ClassifierFamily::ANN: return ann_scores(*model.ann, rows);
    }
    return {};
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const auto& data = j.at("data");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = data[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    return m;
}

nlohmann::json labels_to_json(const std::vector<EventLabel>& labels) {
    nlohmann::json a = nlohmann::json::array();
    for (EventLabel l : labels) a.push_back(label_name(l));
    return a;
}

std::vector<EventLabel> labels_from_json(const nlohmann::json& a) {
    std::vector<EventLabel> out;
    for (const auto& v : a) out.push_back(require_label(v.get<std::string>()));
    return out;
}

} // namespace

nlohmann::json classifier_to_json(const TrainedClassifier& model) {
    nlohmann::json j;
    j["family"] = family_name(model.family);
    j["classes"] = labels_to_json(model.classes);
    j["seed"] = model.seed;
    switch (model.family) {
    case ClassifierFamily::RF: {
        const RandomForest& f = *model.rf;
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : f.trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree.nodes) {
                nlohmann::json counts = nlohmann::json::array();
                for (std::int32_t c : n.class_counts) counts.push_back(c);
                nodes.push_back({{"f", n.feature},
                                 {"t", n.threshold},
                                 {"l", n.left},
                                 {"r", n.right},
                                 {"y", static_cast<int>(n.label)},
                                 {"n", std::move(counts)}});
            }
            trees.push_back(std::move(nodes));
        }
        j["rf"] = {{"n_estimators", f.spec.n_estimators},
                   {"n_max_features", f.spec.n_max_features},
                   {"n_features", f.n_features},
                   {"trees", std::move(trees)}};
        break;
    }
    case ClassifierFamily::KNN: {
        const KnnModel& k = *model.knn;
        j["knn"] = {{"n_neighbors", k.spec.n_neighbors},
                    {"metric", knn_metric_name(k.spec.metric)},
                    {"weighting", knn_weighting_name(k.spec.weighting)},
                    {"x", matrix_to_json(k.X)},
                    {"y", labels_to_json(k.y)}};
        break;
    }
    case ClassifierFamily::SVM: {
        const SvmModel& s = *model.svm;
        nlohmann::json machines = nlohmann::json::array();
        for (const auto& m : s.machines) {
            nlohmann::json coef = nlohmann::json::array();
            for (Eigen::Index i = 0; i < m.coef.size(); ++i) coef.push_back(m.coef(i));
            machines.push_back({{"positive", label_name(m.positive)},
                                {"negative", label_name(m.negative)},
                                {"support_x", matrix_to_json(m.support_x)},
                                {"coef", std::move(coef)},
                                {"rho", m.rho},
                                {"final_violation", m.final_violation},
                                {"converged", m.converged}});
        }
        j["svm"] = {{"C", s.spec.C},
                    {"gamma", s.spec.gamma},
                    {"tol", s.spec.tol},
                    {"n_features", s.n_features},
                    {"classes", labels_to_json(s.classes)},
                    {"machines", std::move(machines)}};
        break;
    }
    case ClassifierFamily::ANN: {
        const AnnModel& a = *model.ann;
        nlohmann::json layers = nlohmann::json::array();
        for (std::size_t l = 0; l < a.W.size(); ++l) {
            nlohmann::json bias = nlohmann::json::array();
            for (Eigen::Index i = 0; i < a.b[l].size(); ++i) bias.push_back(a.b[l](i));
            layers.push_back({{"w", matrix_to_json(a.W[l])}, {"b", std::move(bias)}});
        }
        j["ann"] = {{"hidden", a.spec.hidden},
                    {"dropout", a.spec.dropout},
                    {"epochs", a.spec.epochs},
                    {"batch_size", a.spec.batch_size},
                    {"learning_rate", a.spec.learning_rate},
                    {"n_features", a.n_features},
                    {"classes", labels_to_json(a.classes)},
                    {"layers", std::move(layers)}};
        break;
    }
    }
    return j;
}

TrainedClassifier classifier_from_json(const nlohmann::json& j) {
    TrainedClassifier model;
    model.family = parse_family(j.at("family").get<std::string>());
    model.classes = labels_from_json(j.at("classes"));
    model.seed = j.at("seed").get<std::uint64_t>();
    switch (model.family) {
    case ClassifierFamily::RF: {
        const auto& jf = j.at("rf");
        RandomForest f;
        f.spec.n_estimators = jf.at("n_estimators").get<std::size_t>();
        f.spec.n_max_features = jf.at("n_max_features").get<std::size_t>();
        f.n_features = jf.at("n_features").get<Eigen::Index>();
        for (const auto& jt : jf.at("trees")) {
            DecisionTree tree;
            for (const auto& jn : jt) {
                TreeNode n;
                n.feature = jn.at("f").get<int>();
                n.threshold = jn.at("t").get<double>();
                n.left = jn.at("l").get<int>();
                n.right = jn.at("r").get<int>();
                n.label = static_cast<EventLabel>(jn.at("y").get<int>());
                const auto& counts = jn.at("n");
                for (std::size_t c = 0; c < kNumClasses; ++c)
                    n.class_counts[c] = counts[c].get<std::int32_t>();
                tree.nodes.push_back(n);
            }
            f.trees.push_back(std::move(tree));
        }
        model.rf = std::move(f);
        break;
    }
    case ClassifierFamily::KNN: {
        const auto& jk = j.at("knn");
        KnnModel k;
        k.spec.n_neighbors = jk.at("n_neighbors").get<std::size_t>();
        k.spec.metric = parse_knn_metric(jk.at("metric").get<std::string>());
        k.spec.weighting = parse_knn_weighting(jk.at("weighting").get<std::string>());
        k.X = matrix_from_json(jk.at("x"));
        k.y = labels_from_json(jk.at("y"));
        model.knn = std::move(k);
        break;
    }
    case ClassifierFamily::SVM: {
        const auto& js = j.at("svm");
        SvmModel s;
        s.spec.C = js.at("C").get<double>();
        s.spec.gamma = js.at("gamma").get<double>();
        s.spec.tol = js.at("tol").get<double>();
        s.n_features = js.at("n_features").get<Eigen::Index>();
        s.classes = labels_from_json(js.at("classes"));
        for (const auto& jm : js.at("machines")) {
            BinarySvm m;
            m.positive = require_label(jm.at("positive").get<std::string>());
            m.negative = require_label(jm.at("negative").get<std::string>());
            m.support_x = matrix_from_json(jm.at("support_x"));
            const auto& coef = jm.at("coef");
            m.coef.resize(static_cast<Eigen::Index>(coef.size()));
            for (std::size_t i = 0; i < coef.size(); ++i)
                m.coef(static_cast<Eigen::Index>(i)) = coef[i].get<double>();
            m.rho = jm.at("rho").get<double>();
            m.final_violation = jm.at("final_violation").get<double>();
            m.converged = jm.at("converged").get<bool>();
            s.machines.push_back(std::move(m));
        }
        model.svm = std::move(s);
        break;
    }
    case ClassifierFamily::ANN: {
        const auto& ja = j.at("ann");
        AnnModel a;
        a.spec.hidden = ja.at("hidden").get<std::vector<std::size_t>>();
        a.spec.dropout = ja.at("dropout").get<double>();
        a.spec.epochs = ja.at("epochs").get<std::size_t>();
        a.spec.batch_size = ja.at("batch_size").get<std::size_t>();
        a.spec.learning_rate = ja.at("learning_rate").get<double>();
        a.n_features = ja.at("n_features").get<Eigen::Index>();
        a.classes = labels_from_json(ja.at("classes"));
        for (const auto& jl : ja.at("layers")) {
            a.W.push_back(matrix_from_json(jl.at("w")));
            const auto& bias = jl.at("b");
            Eigen::RowVectorXd b(static_cast<Eigen::Index>(bias.size()));
            for (std::size_t i = 0; i < bias.size(); ++i)
                b(static_cast<Eigen::Index>(i)) = bias[i].get<double>();
            a.b.push_back(std::move(b));
        }
        model.ann = std::move(a);
        break;
    }
    }
    return model;
}

} // namespace cpids
