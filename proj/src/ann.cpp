#include "cpids/ann.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cpids/errors.hpp"

namespace cpids {

namespace {

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - m).exp();
        z.row(r) /= z.row(r).sum();
    }
    return z;
}

// Forward pass; when masks is non-null, applies the given inverted-dropout
// masks to each hidden activation.
std::vector<Eigen::MatrixXd> forward(const AnnModel& model, const Eigen::MatrixXd& X,
                                     const std::vector<Eigen::MatrixXd>* masks) {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(model.W.size() + 1);
    acts.push_back(X);
    for (std::size_t l = 0; l < model.W.size(); ++l) {
        Eigen::MatrixXd z = (acts.back() * model.W[l]).rowwise() + model.b[l];
        if (l + 1 < model.W.size()) {
            z = z.cwiseMax(0.0); // ReLU on hidden layers
            if (masks) z = z.cwiseProduct((*masks)[l]);
        }
        acts.push_back(std::move(z));
    }
    return acts;
}

// Backprop from softmax cross-entropy; fills gradients for every layer.
double backward(const AnnModel& model, const std::vector<Eigen::MatrixXd>& acts,
                const std::vector<std::size_t>& target_idx, const std::vector<Eigen::MatrixXd>* masks,
                std::vector<Eigen::MatrixXd>& gW, std::vector<Eigen::RowVectorXd>& gb) {
    const Eigen::Index n = acts.front().rows();
    const Eigen::MatrixXd probs = softmax_rows(acts.back());
    double loss = 0.0;
    Eigen::MatrixXd delta = probs;
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index t = static_cast<Eigen::Index>(target_idx[static_cast<std::size_t>(r)]);
        loss -= std::log(std::max(probs(r, t), 1e-300));
        delta(r, t) -= 1.0;
    }
    loss /= static_cast<double>(n);
    delta /= static_cast<double>(n);

    for (std::size_t l = model.W.size(); l-- > 0;) {
        gW[l] = acts[l].transpose() * delta;
        gb[l] = delta.colwise().sum();
        if (l == 0) break;
        delta = delta * model.W[l].transpose();
        // ReLU derivative via the post-activation values (mask included)
        delta = delta.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        if (masks) delta = delta.cwiseProduct((*masks)[l - 1]);
    }
    return loss;
}

} // namespace

AnnModel train_ann(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y, const AnnSpec& spec,
                   Rng& rng) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        raise(errc::length_mismatch,
              "ann: " + std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
    if (y.empty()) raise(errc::length_mismatch, "ann: no training rows");
    if (spec.dropout < 0.0 || spec.dropout >= 1.0)
        raise(errc::invalid_config, "dropout rate must lie in [0, 1)");
    if (spec.batch_size == 0 || spec.epochs == 0)
        raise(errc::invalid_config, "ann needs positive epochs and batch size");

    AnnModel model;
    model.spec = spec;
    model.n_features = X.cols();
    {
        std::map<EventLabel, std::size_t> seen;
        for (EventLabel l : y) seen.emplace(l, seen.size());
        for (const auto& [label, idx] : seen) model.classes.push_back(label);
    }
    std::map<EventLabel, std::size_t> class_pos;
    for (std::size_t c = 0; c < model.classes.size(); ++c) class_pos[model.classes[c]] = c;
    std::vector<std::size_t> targets(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) targets[i] = class_pos[y[i]];

    std::vector<std::size_t> dims;
    dims.push_back(static_cast<std::size_t>(X.cols()));
    for (std::size_t h : spec.hidden) dims.push_back(h);
    dims.push_back(model.classes.size());

    // He initialization scaled by fan-in
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd W(static_cast<Eigen::Index>(dims[l]), static_cast<Eigen::Index>(dims[l + 1]));
        const double s = std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = s * rng.next_gauss();
        model.W.push_back(std::move(W));
        model.b.push_back(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dims[l + 1])));
    }

    // Adam state
    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::RowVectorXd> mb, vb;
    for (std::size_t l = 0; l < model.W.size(); ++l) {
        mW.push_back(Eigen::MatrixXd::Zero(model.W[l].rows(), model.W[l].cols()));
        vW.push_back(Eigen::MatrixXd::Zero(model.W[l].rows(), model.W[l].cols()));
        mb.push_back(Eigen::RowVectorXd::Zero(model.b[l].size()));
        vb.push_back(Eigen::RowVectorXd::Zero(model.b[l].size()));
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double keep = 1.0 - spec.dropout;

    std::vector<std::size_t> order(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<Eigen::MatrixXd> gW(model.W.size());
    std::vector<Eigen::RowVectorXd> gb(model.W.size());

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
            const std::size_t count = std::min(spec.batch_size, order.size() - start);
            Eigen::MatrixXd Xb(static_cast<Eigen::Index>(count), X.cols());
            std::vector<std::size_t> tb(count);
            for (std::size_t i = 0; i < count; ++i) {
                Xb.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(order[start + i]));
                tb[i] = targets[order[start + i]];
            }

            std::vector<Eigen::MatrixXd> masks;
            const std::vector<Eigen::MatrixXd>* masks_ptr = nullptr;
            if (spec.dropout > 0.0 && !spec.hidden.empty()) {
                for (std::size_t h : spec.hidden) {
                    Eigen::MatrixXd m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(h));
                    for (Eigen::Index i = 0; i < m.rows(); ++i)
                        for (Eigen::Index j = 0; j < m.cols(); ++j)
                            m(i, j) = rng.next_real() < keep ? 1.0 / keep : 0.0;
                    masks.push_back(std::move(m));
                }
                masks_ptr = &masks;
            }

            const auto acts = forward(model, Xb, masks_ptr);
            backward(model, acts, tb, masks_ptr, gW, gb);

            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.W.size(); ++l) {
                mW[l] = beta1 * mW[l] + (1.0 - beta1) * gW[l];
                vW[l] = beta2 * vW[l] + (1.0 - beta2) * gW[l].cwiseProduct(gW[l]);
                model.W[l].array() -=
                    spec.learning_rate * (mW[l].array() / bc1) / ((vW[l].array() / bc2).sqrt() + eps);
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
                vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
                model.b[l].array() -=
                    spec.learning_rate * (mb[l].array() / bc1) / ((vb[l].array() / bc2).sqrt() + eps);
            }
        }
    }
    return model;
}

Eigen::MatrixXd ann_scores(const AnnModel& model, const Eigen::MatrixXd& rows) {
    if (rows.cols() != model.n_features)
        raise(errc::dimension_mismatch, "ann trained on " + std::to_string(model.n_features) +
                                            " columns, got " + std::to_string(rows.cols()));
    const auto acts = forward(model, rows, nullptr);
    const Eigen::MatrixXd probs = softmax_rows(acts.back());
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(rows.rows(), static_cast<Eigen::Index>(kNumClasses));
    for (std::size_t c = 0; c < model.classes.size(); ++c)
        scores.col(static_cast<Eigen::Index>(model.classes[c])) = probs.col(static_cast<Eigen::Index>(c));
    return scores;
}

std::vector<EventLabel> ann_predict(const AnnModel& model, const Eigen::MatrixXd& rows) {
    const Eigen::MatrixXd scores = ann_scores(model, rows);
    std::vector<EventLabel> out;
    out.reserve(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < kNumClasses; ++c)
            if (scores(r, static_cast<Eigen::Index>(c)) > scores(r, static_cast<Eigen::Index>(best))) best = c;
        out.push_back(static_cast<EventLabel>(best));
    }
    return out;
}

double ann_loss_and_gradients(const AnnModel& model, const Eigen::MatrixXd& X,
                              const std::vector<std::size_t>& target_idx,
                              std::vector<Eigen::MatrixXd>* grad_W,
                              std::vector<Eigen::RowVectorXd>* grad_b) {
    std::vector<Eigen::MatrixXd> gW(model.W.size());
    std::vector<Eigen::RowVectorXd> gb(model.W.size());
    const auto acts = forward(model, X, nullptr);
    const double loss = backward(model, acts, target_idx, nullptr, gW, gb);
    if (grad_W) *grad_W = std::move(gW);
    if (grad_b) *grad_b = std::move(gb);
    return loss;
}

} // namespace cpids
