#include "cpids/transform.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "cpids/errors.hpp"
#include "cpids/forest.hpp"
#include "cpids/partition.hpp"
#include "cpids/rng.hpp"

namespace cpids {

ScalerKind parse_scaler(const std::string& name) {
    if (name == "none") return ScalerKind::None;
    if (name == "standardize") return ScalerKind::Standardize;
    if (name == "minmax01") return ScalerKind::MinMax01;
    if (name == "maxabs") return ScalerKind::MaxAbs;
    raise(errc::invalid_config, "unknown scaler '" + name + "' (expected none, standardize, minmax01 or maxabs)");
}

const char* scaler_name(ScalerKind kind) {
    switch (kind) {
    case ScalerKind::None: return "none";
    case ScalerKind::Standardize: return "standardize";
    case ScalerKind::MinMax01: return "minmax01";
    case ScalerKind::MaxAbs: return "maxabs";
    }
    return "?";
}

Scaler fit_scaler(const Eigen::MatrixXd& train, ScalerKind kind) {
    Scaler s;
    s.kind = kind;
    if (kind == ScalerKind::None) return s;
    if (train.rows() == 0) raise(errc::length_mismatch, "cannot fit a scaler on zero rows");
    const Eigen::Index d = train.cols();
    switch (kind) {
    case ScalerKind::Standardize: {
        s.center = train.colwise().mean();
        Eigen::VectorXd var(d);
        for (Eigen::Index c = 0; c < d; ++c)
            var(c) = (train.col(c).array() - s.center(c)).square().mean();
        s.scale = var.array().sqrt();
        for (Eigen::Index c = 0; c < d; ++c)
            if (s.scale(c) == 0.0) s.scale(c) = 1.0; // constant column: pass through centered
        break;
    }
    case ScalerKind::MinMax01: {
        s.offset = train.colwise().minCoeff();
        const Eigen::VectorXd hi = train.colwise().maxCoeff();
        s.scale = hi - s.offset;
        for (Eigen::Index c = 0; c < d; ++c)
            if (s.scale(c) == 0.0)
                raise(errc::degenerate_column, "column " + std::to_string(c) +
                                                   " has zero spread; min-max scaling is undefined");
        break;
    }
    case ScalerKind::MaxAbs: {
        s.scale = train.array().abs().colwise().maxCoeff();
        for (Eigen::Index c = 0; c < d; ++c)
            if (s.scale(c) == 0.0) s.scale(c) = 1.0; // all-zero column stays zero
        break;
    }
    case ScalerKind::None: break;
    }
    return s;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& rows) {
    switch (scaler.kind) {
    case ScalerKind::None: return rows;
    case ScalerKind::Standardize: {
        if (rows.cols() != scaler.center.size())
            raise(errc::dimension_mismatch, "scaler fitted on " + std::to_string(scaler.center.size()) +
                                                " columns, got " + std::to_string(rows.cols()));
        Eigen::MatrixXd out = rows;
        out.rowwise() -= scaler.center.transpose();
        out.array().rowwise() /= scaler.scale.transpose().array();
        return out;
    }
    case ScalerKind::MinMax01: {
        if (rows.cols() != scaler.offset.size())
            raise(errc::dimension_mismatch, "scaler fitted on " + std::to_string(scaler.offset.size()) +
                                                " columns, got " + std::to_string(rows.cols()));
        Eigen::MatrixXd out = rows;
        out.rowwise() -= scaler.offset.transpose();
        out.array().rowwise() /= scaler.scale.transpose().array();
        return out;
    }
    case ScalerKind::MaxAbs: {
        if (rows.cols() != scaler.scale.size())
            raise(errc::dimension_mismatch, "scaler fitted on " + std::to_string(scaler.scale.size()) +
                                                " columns, got " + std::to_string(rows.cols()));
        Eigen::MatrixXd out = rows;
        out.array().rowwise() /= scaler.scale.transpose().array();
        return out;
    }
    }
    return rows;
}

double pca_log_evidence(const Eigen::VectorXd& spectrum, std::size_t rank, std::size_t n_samples) {
    const std::size_t p = static_cast<std::size_t>(spectrum.size());
    const double inf = std::numeric_limits<double>::infinity();
    if (rank < 1 || rank >= p) return -inf;
    constexpr double eps = 1e-15;
    if (spectrum(static_cast<Eigen::Index>(rank) - 1) < eps) return -inf;
    const double n = static_cast<double>(n_samples);
    const double pd = static_cast<double>(p);

    double pu = -static_cast<double>(rank) * std::numbers::ln2;
    for (std::size_t i = 1; i <= rank; ++i) {
        const double half = (pd - static_cast<double>(i) + 1.0) / 2.0;
        pu += std::lgamma(half) - std::log(std::numbers::pi) * half;
    }

    double pl = 0.0;
    for (std::size_t i = 0; i < rank; ++i) pl += std::log(spectrum(static_cast<Eigen::Index>(i)));
    pl *= -n / 2.0;

    double tail = 0.0;
    for (std::size_t i = rank; i < p; ++i) tail += spectrum(static_cast<Eigen::Index>(i));
    const double v = std::max(eps, tail / (pd - static_cast<double>(rank)));
    const double pv = -std::log(v) * n * (pd - static_cast<double>(rank)) / 2.0;

    const double m = pd * static_cast<double>(rank) -
                     static_cast<double>(rank) * (static_cast<double>(rank) + 1.0) / 2.0;
    const double pp = std::log(2.0 * std::numbers::pi) * (m + static_cast<double>(rank)) / 2.0;

    double pa = 0.0;
    for (std::size_t i = 0; i < rank; ++i) {
        const double li = spectrum(static_cast<Eigen::Index>(i));
        for (std::size_t j = i + 1; j < p; ++j) {
            const double lj = spectrum(static_cast<Eigen::Index>(j));
            const double lj_hat = j >= rank ? v : lj;
            pa += std::log((li - lj) * (1.0 / lj_hat - 1.0 / li)) + std::log(n);
        }
    }

    return pu + pl + pv + pp - pa / 2.0 - static_cast<double>(rank) * std::log(n) / 2.0;
}

PcaModel fit_pca(const Eigen::MatrixXd& train) {
    const Eigen::Index n = train.rows();
    const Eigen::Index d = train.cols();
    if (n < 2) raise(errc::length_mismatch, "PCA needs at least 2 training rows");
    PcaModel model;
    model.mean = train.colwise().mean();
    Eigen::MatrixXd centered = train.rowwise() - model.mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0)
        raise(errc::all_constant, "PCA input has no variance at all");

    model.eigenvalues = sv.array().square() / static_cast<double>(n - 1);

    // numerical rank cap
    const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(n, d)) * sv(0);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;

    const std::size_t p = static_cast<std::size_t>(model.eigenvalues.size());
    std::size_t best_k = 1;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < p; ++k) {
        const double ll = pca_log_evidence(model.eigenvalues, k, static_cast<std::size_t>(n));
        if (ll > best_ll) {
            best_ll = ll;
            best_k = k;
        }
    }
    if (p == 1) best_k = 1;
    model.k = std::max<std::size_t>(1, std::min(best_k, std::max<std::size_t>(rank, 1)));

    const Eigen::MatrixXd& V = svd.matrixV(); // d x min(n,d)
    model.components.resize(static_cast<Eigen::Index>(model.k), d);
    for (std::size_t r = 0; r < model.k; ++r) {
        Eigen::RowVectorXd comp = V.col(static_cast<Eigen::Index>(r)).transpose();
        Eigen::Index arg = 0;
        comp.array().abs().maxCoeff(&arg);
        if (comp(arg) < 0.0) comp = -comp;
        model.components.row(static_cast<Eigen::Index>(r)) = comp;
    }
    return model;
}

Eigen::MatrixXd apply_pca(const PcaModel& model, const Eigen::MatrixXd& rows) {
    if (rows.cols() != model.mean.size())
        raise(errc::dimension_mismatch, "PCA fitted on " + std::to_string(model.mean.size()) +
                                            " columns, got " + std::to_string(rows.cols()));
    return (rows.rowwise() - model.mean) * model.components.transpose();
}

Eigen::MatrixXd inverse_pca(const PcaModel& model, const Eigen::MatrixXd& projected) {
    if (projected.cols() != static_cast<Eigen::Index>(model.k))
        raise(errc::dimension_mismatch, "PCA projection has " + std::to_string(model.k) +
                                            " components, got " + std::to_string(projected.cols()));
    return (projected * model.components).rowwise() + model.mean;
}

ResamplerKind parse_resampler(const std::string& name) {
    if (name == "none") return ResamplerKind::None;
    if (name == "tomek") return ResamplerKind::Tomek;
    if (name == "iht") return ResamplerKind::Iht;
    if (name == "smote") return ResamplerKind::Smote;
    if (name == "borderline_smote") return ResamplerKind::BorderlineSmote;
    raise(errc::invalid_config,
          "unknown resampler '" + name + "' (expected none, tomek, iht, smote or borderline_smote)");
}

const char* resampler_name(ResamplerKind kind) {
    switch (kind) {
    case ResamplerKind::None: return "none";
    case ResamplerKind::Tomek: return "tomek";
    case ResamplerKind::Iht: return "iht";
    case ResamplerKind::Smote: return "smote";
    case ResamplerKind::BorderlineSmote: return "borderline_smote";
    }
    return "?";
}

namespace {

// k nearest candidates per query by squared Euclidean distance, ties broken
// toward the lower candidate index; a query never matches itself.
std::vector<std::vector<std::size_t>> knn_indices(const Eigen::MatrixXd& X,
                                                  const std::vector<std::size_t>& queries,
                                                  const std::vector<std::size_t>& candidates, std::size_t k) {
    std::vector<std::vector<std::size_t>> out(queries.size());
    std::vector<std::pair<double, std::size_t>> dists;
    dists.reserve(candidates.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const std::size_t q = queries[qi];
        dists.clear();
        for (std::size_t c : candidates) {
            if (c == q) continue;
            const double d2 = (X.row(static_cast<Eigen::Index>(q)) - X.row(static_cast<Eigen::Index>(c)))
                                  .squaredNorm();
            dists.emplace_back(d2, c);
        }
        const std::size_t take = std::min(k, dists.size());
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(take), dists.end());
        out[qi].reserve(take);
        for (std::size_t i = 0; i < take; ++i) out[qi].push_back(dists[i].second);
    }
    return out;
}

std::map<EventLabel, std::vector<std::size_t>> group_by_class(const std::vector<EventLabel>& labels) {
    std::map<EventLabel, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    return groups;
}

ResampleResult keep_rows(const Eigen::MatrixXd& rows, const std::vector<EventLabel>& labels,
                         const std::vector<bool>& keep) {
    std::size_t n_keep = 0;
    for (bool b : keep)
        if (b) ++n_keep;
    ResampleResult out;
    out.rows.resize(static_cast<Eigen::Index>(n_keep), rows.cols());
    out.labels.reserve(n_keep);
    Eigen::Index w = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        out.rows.row(w++) = rows.row(static_cast<Eigen::Index>(i));
        out.labels.push_back(labels[i]);
    }
    return out;
}

ResampleResult remove_tomek_links(const Eigen::MatrixXd& rows, const std::vector<EventLabel>& labels) {
    const std::size_t n = labels.size();
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const auto nn = knn_indices(rows, all, all, 1);

    std::map<EventLabel, std::size_t> counts;
    for (EventLabel l : labels) ++counts[l];

    std::vector<bool> keep(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        if (nn[i].empty()) continue;
        const std::size_t j = nn[i][0];
        if (j < i) continue; // each mutual pair handled once
        if (nn[j].empty() || nn[j][0] != i) continue;
        if (labels[i] == labels[j]) continue;
        const std::size_t ci = counts[labels[i]];
        const std::size_t cj = counts[labels[j]];
        // remove the member of the globally larger class; equal sizes keep both
        if (ci > cj)
            keep[i] = false;
        else if (cj > ci)
            keep[j] = false;
    }
    return keep_rows(rows, labels, keep);
}

ResampleResult undersample_iht(const Eigen::MatrixXd& rows, const std::vector<EventLabel>& labels,
                               std::uint64_t seed, const ResampleOptions& opts) {
    const std::size_t n = labels.size();
    auto groups = group_by_class(labels);
    std::size_t target = std::numeric_limits<std::size_t>::max();
    for (const auto& [label, members] : groups) target = std::min(target, members.size());

    // out-of-fold probability of each sample's own class under a small forest
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    Rng rng(seed);
    const auto folds = stratified_shuffled_folds(labels, all, opts.iht_folds, rng.fork(1).next_u64());
    std::vector<double> own_prob(n, 0.0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        std::sort(train_idx.begin(), train_idx.end());
        Eigen::MatrixXd Xf(static_cast<Eigen::Index>(train_idx.size()), rows.cols());
        std::vector<EventLabel> yf;
        yf.reserve(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            Xf.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(train_idx[i]));
            yf.push_back(labels[train_idx[i]]);
        }
        ForestSpec fspec;
        fspec.n_estimators = opts.iht_estimators;
        Rng tree_rng = rng.fork(100 + f);
        const RandomForest forest = train_forest(Xf, yf, fspec, tree_rng);
        Eigen::MatrixXd Xv(static_cast<Eigen::Index>(folds[f].size()), rows.cols());
        for (std::size_t i = 0; i < folds[f].size(); ++i)
            Xv.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(folds[f][i]));
        const Eigen::MatrixXd scores = forest_scores(forest, Xv);
        for (std::size_t i = 0; i < folds[f].size(); ++i)
            own_prob[folds[f][i]] = scores(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(labels[folds[f][i]]));
    }

    std::vector<bool> keep(n, false);
    for (auto& [label, members] : groups) {
        if (members.size() <= target) {
            for (std::size_t i : members) keep[i] = true;
            continue;
        }
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            if (own_prob[a] != own_prob[b]) return own_prob[a] > own_prob[b];
            return a < b;
        });
        for (std::size_t i = 0; i < target; ++i) keep[members[i]] = true;
    }
    return keep_rows(rows, labels, keep);
}

ResampleResult oversample_smote(const Eigen::MatrixXd& rows, const std::vector<EventLabel>& labels,
                                bool borderline, std::uint64_t seed, const ResampleOptions& opts) {
    const std::size_t k = opts.k_neighbors;
    auto groups = group_by_class(labels);
    std::size_t majority = 0;
    for (const auto& [label, members] : groups) majority = std::max(majority, members.size());

    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) all[i] = i;

    std::vector<Eigen::RowVectorXd> synth_rows;
    std::vector<EventLabel> synth_labels;
    Rng root(seed);

    for (const auto& [label, members] : groups) {
        const std::size_t n_syn = majority - members.size();
        if (n_syn == 0) continue;
        if (members.size() < k + 1)
            raise(errc::too_few_minority, std::string(label_name(label)) + " has " +
                                              std::to_string(members.size()) + " rows; SMOTE with k=" +
                                              std::to_string(k) + " needs at least " + std::to_string(k + 1));

        // interpolation neighbors: k nearest same-class points
        const auto same_class_nn = knn_indices(rows, members, members, k);

        std::vector<std::size_t> seeds = members;
        if (borderline) {
            // danger set: more other-class than own-class points among the
            // k nearest neighbors over the whole training set
            const auto global_nn = knn_indices(rows, members, all, k);
            std::vector<std::size_t> danger;
            for (std::size_t mi = 0; mi < members.size(); ++mi) {
                std::size_t other = 0;
                for (std::size_t nb : global_nn[mi])
                    if (labels[nb] != label) ++other;
                if (2 * other > global_nn[mi].size()) danger.push_back(members[mi]);
            }
            if (!danger.empty()) seeds = std::move(danger);
            // an empty danger set falls back to plain SMOTE seeding so the
            // balance contract still holds
        }

        std::map<std::size_t, std::size_t> member_pos;
        for (std::size_t mi = 0; mi < members.size(); ++mi) member_pos[members[mi]] = mi;

        Rng rng = root.fork(static_cast<std::uint64_t>(label));
        for (std::size_t s = 0; s < n_syn; ++s) {
            const std::size_t seed_idx = seeds[rng.next_index(seeds.size())];
            const auto& nns = same_class_nn[member_pos[seed_idx]];
            const std::size_t nb = nns[rng.next_index(nns.size())];
            const double u = rng.next_open_real();
            const Eigen::RowVectorXd x = rows.row(static_cast<Eigen::Index>(seed_idx));
            const Eigen::RowVectorXd diff = rows.row(static_cast<Eigen::Index>(nb)) - x;
            synth_rows.push_back(x + u * diff);
            synth_labels.push_back(label);
        }
    }

    ResampleResult out;
    out.rows.resize(rows.rows() + static_cast<Eigen::Index>(synth_rows.size()), rows.cols());
    out.rows.topRows(rows.rows()) = rows;
    for (std::size_t i = 0; i < synth_rows.size(); ++i)
        out.rows.row(rows.rows() + static_cast<Eigen::Index>(i)) = synth_rows[i];
    out.labels = labels;
    out.labels.insert(out.labels.end(), synth_labels.begin(), synth_labels.end());
    return out;
}

} // namespace

ResampleResult resample(const Eigen::MatrixXd& rows, const std::vector<EventLabel>& labels,
                        ResamplerKind kind, std::uint64_t seed, const ResampleOptions& opts) {
    if (static_cast<std::size_t>(rows.rows()) != labels.size())
        raise(errc::length_mismatch, "resample: " + std::to_string(rows.rows()) + " rows vs " +
                                         std::to_string(labels.size()) + " labels");
    switch (kind) {
    case ResamplerKind::None: return {rows, labels};
    case ResamplerKind::Tomek: return remove_tomek_links(rows, labels);
    case ResamplerKind::Iht: return undersample_iht(rows, labels, seed, opts);
    case ResamplerKind::Smote: return oversample_smote(rows, labels, false, seed, opts);
    case ResamplerKind::BorderlineSmote: return oversample_smote(rows, labels, true, seed, opts);
    }
    return {rows, labels};
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

} // namespace

nlohmann::json scaler_to_json(const Scaler& scaler) {
    nlohmann::json j;
    j["kind"] = scaler_name(scaler.kind);
    j["center"] = vector_to_json(scaler.center);
    j["scale"] = vector_to_json(scaler.scale);
    j["offset"] = vector_to_json(scaler.offset);
    return j;
}

Scaler scaler_from_json(const nlohmann::json& j) {
    Scaler s;
    s.kind = parse_scaler(j.at("kind").get<std::string>());
    s.center = vector_from_json(j.at("center"));
    s.scale = vector_from_json(j.at("scale"));
    s.offset = vector_from_json(j.at("offset"));
    return s;
}

nlohmann::json pca_to_json(const PcaModel& model) {
    nlohmann::json j;
    j["k"] = model.k;
    j["mean"] = vector_to_json(model.mean.transpose());
    j["eigenvalues"] = vector_to_json(model.eigenvalues);
    nlohmann::json comps = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model.components.rows(); ++r)
        comps.push_back(vector_to_json(model.components.row(r).transpose()));
    j["components"] = std::move(comps);
    return j;
}

PcaModel pca_from_json(const nlohmann::json& j) {
    PcaModel m;
    m.k = j.at("k").get<std::size_t>();
    m.mean = vector_from_json(j.at("mean")).transpose();
    m.eigenvalues = vector_from_json(j.at("eigenvalues"));
    const auto& comps = j.at("components");
    if (comps.empty()) raise(errc::bundle_version_mismatch, "PCA bundle has no components");
    m.components.resize(static_cast<Eigen::Index>(comps.size()), static_cast<Eigen::Index>(comps[0].size()));
    for (std::size_t r = 0; r < comps.size(); ++r)
        m.components.row(static_cast<Eigen::Index>(r)) = vector_from_json(comps[r]).transpose();
    return m;
}

} // namespace cpids
