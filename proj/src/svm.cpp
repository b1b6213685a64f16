#include "cpids/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <map>
#include <unordered_map>

#include "cpids/errors.hpp"

namespace cpids {

namespace {

// RBF kernel rows against a fixed sample set, with an LRU cache so the
// quadratic kernel matrix never has to exist at once for large problems.
class KernelCache {
public:
    KernelCache(const Eigen::MatrixXd& X, double gamma, std::size_t max_rows)
        : X_(X), gamma_(gamma), max_rows_(std::max<std::size_t>(2, max_rows)) {
        norms_ = X_.rowwise().squaredNorm();
    }

    const Eigen::VectorXd& row(Eigen::Index i) {
        auto it = cache_.find(i);
        if (it != cache_.end()) {
            order_.splice(order_.begin(), order_, it->second.second);
            return it->second.first;
        }
        if (cache_.size() >= max_rows_) {
            const Eigen::Index victim = order_.back();
            order_.pop_back();
            cache_.erase(victim);
        }
        Eigen::VectorXd k =
            (-gamma_ *
             (norms_.array() - 2.0 * (X_ * X_.row(i).transpose()).array() + norms_(i)))
                .cwiseMin(0.0)
                .exp();
        order_.push_front(i);
        auto [pos, inserted] = cache_.emplace(i, std::make_pair(std::move(k), order_.begin()));
        return pos->second.first;
    }

private:
    const Eigen::MatrixXd& X_;
    double gamma_;
    std::size_t max_rows_;
    Eigen::VectorXd norms_;
    std::list<Eigen::Index> order_;
    std::unordered_map<Eigen::Index, std::pair<Eigen::VectorXd, std::list<Eigen::Index>::iterator>> cache_;
};

// Sequential minimal optimization with maximal-violating-pair working sets.
BinarySvm solve_binary(const Eigen::MatrixXd& X, const std::vector<double>& y, const SvmSpec& spec,
                       EventLabel positive, EventLabel negative) {
    const Eigen::Index n = X.rows();
    const double C = spec.C;
    constexpr double kTau = 1e-12;

    // Cache budget: ~256 MB of kernel rows, at least 64 rows.
    const std::size_t cache_rows =
        std::max<std::size_t>(64, (256ull << 20) / (static_cast<std::size_t>(n) * sizeof(double) + 1));
    KernelCache cache(X, spec.gamma, cache_rows);

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0); // gradient of the dual at alpha = 0

    const std::size_t max_iter =
        spec.max_iter > 0 ? spec.max_iter
                          : std::max<std::size_t>(10'000'000, static_cast<std::size_t>(n) * 1000);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // working set: i maximizes -y G over I_up, j minimizes -y G over I_low
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -y[static_cast<std::size_t>(t)] * grad(t);
            const bool in_up = (y[static_cast<std::size_t>(t)] > 0 && alpha(t) < C) ||
                               (y[static_cast<std::size_t>(t)] < 0 && alpha(t) > 0);
            const bool in_low = (y[static_cast<std::size_t>(t)] < 0 && alpha(t) < C) ||
                                (y[static_cast<std::size_t>(t)] > 0 && alpha(t) > 0);
            if (in_up && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        if (m_up - m_low < spec.tol || i < 0 || j < 0) break;

        const Eigen::VectorXd& Ki = cache.row(i);
        const Eigen::VectorXd& Kj = cache.row(j);
        const double yi = y[static_cast<std::size_t>(i)];
        const double yj = y[static_cast<std::size_t>(j)];
        const double old_ai = alpha(i);
        const double old_aj = alpha(j);

        if (yi != yj) {
            double quad = Ki(i) + Kj(j) + 2.0 * Ki(j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            } else {
                if (alpha(i) < 0.0) {
                    alpha(i) = 0.0;
                    alpha(j) = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = C - diff;
                }
            } else {
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = C + diff;
                }
            }
        } else {
            double quad = Ki(i) + Kj(j) - 2.0 * Ki(j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > C) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = sum - C;
                }
            } else {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = sum;
                }
            }
            if (sum > C) {
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = sum - C;
                }
            } else {
                if (alpha(i) < 0.0) {
                    alpha(i) = 0.0;
                    alpha(j) = sum;
                }
            }
        }

        const double dai = alpha(i) - old_ai;
        const double daj = alpha(j) - old_aj;
        if (dai == 0.0 && daj == 0.0) break; // numerically stuck
        for (Eigen::Index t = 0; t < n; ++t) {
            const double yt = y[static_cast<std::size_t>(t)];
            grad(t) += yt * yi * Ki(t) * dai + yt * yj * Kj(t) * daj;
        }
    }

    // rho from the final bound midpoints
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
        const double v = -y[static_cast<std::size_t>(t)] * grad(t);
        const bool in_up = (y[static_cast<std::size_t>(t)] > 0 && alpha(t) < C) ||
                           (y[static_cast<std::size_t>(t)] < 0 && alpha(t) > 0);
        const bool in_low = (y[static_cast<std::size_t>(t)] < 0 && alpha(t) < C) ||
                            (y[static_cast<std::size_t>(t)] > 0 && alpha(t) > 0);
        if (in_up) m_up = std::max(m_up, v);
        if (in_low) m_low = std::min(m_low, v);
    }

    BinarySvm machine;
    machine.positive = positive;
    machine.negative = negative;
    machine.rho = -(m_up + m_low) / 2.0;
    machine.final_violation = m_up - m_low;
    machine.converged = machine.final_violation < spec.tol;

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha(t) > 0.0) sv.push_back(t);
    machine.support_x.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
    machine.coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        machine.support_x.row(static_cast<Eigen::Index>(s)) = X.row(sv[s]);
        machine.coef(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * y[static_cast<std::size_t>(sv[s])];
    }
    return machine;
}

} // namespace

SvmModel train_svm(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y, const SvmSpec& spec) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        raise(errc::length_mismatch,
              "svm: " + std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
    if (spec.C <= 0.0 || spec.gamma <= 0.0)
        raise(errc::invalid_config, "svm penalty and kernel coefficient must be positive");

    std::map<EventLabel, std::vector<Eigen::Index>> groups;
    for (std::size_t i = 0; i < y.size(); ++i) groups[y[i]].push_back(static_cast<Eigen::Index>(i));
    if (groups.size() < 2)
        raise(errc::single_class, "svm needs at least two classes in the training data");

    SvmModel model;
    model.spec = spec;
    model.n_features = X.cols();
    for (const auto& [label, rows] : groups) model.classes.push_back(label);

    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            const auto& ra = groups[model.classes[a]];
            const auto& rb = groups[model.classes[b]];
            Eigen::MatrixXd Xp(static_cast<Eigen::Index>(ra.size() + rb.size()), X.cols());
            std::vector<double> yp(ra.size() + rb.size());
            for (std::size_t i = 0; i < ra.size(); ++i) {
                Xp.row(static_cast<Eigen::Index>(i)) = X.row(ra[i]);
                yp[i] = 1.0;
            }
            for (std::size_t i = 0; i < rb.size(); ++i) {
                Xp.row(static_cast<Eigen::Index>(ra.size() + i)) = X.row(rb[i]);
                yp[ra.size() + i] = -1.0;
            }
            model.machines.push_back(solve_binary(Xp, yp, spec, model.classes[a], model.classes[b]));
        }
    }
    return model;
}

double svm_decision(const BinarySvm& machine, double gamma,
                    const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    if (machine.support_x.rows() == 0) return -machine.rho;
    const Eigen::VectorXd d2 =
        (machine.support_x.rowwise() - row).rowwise().squaredNorm();
    return (machine.coef.array() * (-gamma * d2.array()).exp()).sum() - machine.rho;
}

Eigen::MatrixXd svm_scores(const SvmModel& model, const Eigen::MatrixXd& rows) {
    if (rows.cols() != model.n_features)
        raise(errc::dimension_mismatch, "svm trained on " + std::to_string(model.n_features) +
                                            " columns, got " + std::to_string(rows.cols()));
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(rows.rows(), static_cast<Eigen::Index>(kNumClasses));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (const auto& machine : model.machines) {
            const double d = svm_decision(machine, model.spec.gamma, rows.row(r));
            const EventLabel vote = d >= 0.0 ? machine.positive : machine.negative;
            scores(r, static_cast<Eigen::Index>(vote)) += 1.0;
        }
        scores.row(r) /= static_cast<double>(model.machines.size());
    }
    return scores;
}

std::vector<EventLabel> svm_predict(const SvmModel& model, const Eigen::MatrixXd& rows) {
    const Eigen::MatrixXd scores = svm_scores(model, rows);
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

} // namespace cpids
