// RBF-kernel SVM: one-vs-rest, dual coordinate updates on K + 1 with a shared kernel column cache.

#include "learners/internal.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <numeric>
#include <unordered_map>

namespace driftml::learners::detail {

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return std::exp(-gamma * s);
}

// LRU cache of columns of K + 1 over the training rows.
class KernelCache {
  public:
    KernelCache(const Matrix &X, double gamma, std::size_t budget_bytes) :
        X_{ X },
        gamma_{ gamma },
        capacity_{ std::max<std::size_t>(2, budget_bytes / (sizeof(double) * std::max<std::size_t>(1, X.rows()))) } {}

    const std::vector<double> &column(std::size_t i) {
        if (const auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        std::vector<double> col(X_.rows());
        const auto xi = X_.row(i);
        for (std::size_t k = 0; k < X_.rows(); ++k) {
            col[k] = rbf(xi, X_.row(k), gamma_) + 1.0;
        }
        lru_.emplace_front(i, std::move(col));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

  private:
    const Matrix &X_;
    double gamma_;
    std::size_t capacity_;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator> index_;
};

class RbfSvmClassifier final : public Classifier {
  public:
    // coef is row-major n_support x n_classes holding alpha_i * t_i per one-vs-rest problem
    RbfSvmClassifier(Matrix support, Matrix coef, double gamma) : support_{ std::move(support) }, coef_{ std::move(coef) }, gamma_{ gamma } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        Matrix scores(X.rows(), coef_.cols(), 0.0);
        for (std::size_t q = 0; q < X.rows(); ++q) {
            auto row = scores.row(q);
            for (std::size_t s = 0; s < support_.rows(); ++s) {
                const double k = rbf(X.row(q), support_.row(s), gamma_) + 1.0;
                const auto a = coef_.row(s);
                for (std::size_t c = 0; c < row.size(); ++c) {
                    row[c] += a[c] * k;
                }
            }
        }
        return ovr_softmax(std::move(scores));
    }

    [[nodiscard]] nlohmann::json state() const override {
        return { { "gamma", gamma_ }, { "n_support", support_.rows() }, { "dim", support_.cols() }, { "n_classes", coef_.cols() }, { "support", support_.data() }, { "coef", coef_.data() } };
    }

  private:
    Matrix support_;
    Matrix coef_;
    double gamma_;
};

}  // namespace

ClassifierPtr fit_svm_rbf(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    constexpr double tolerance = 1e-3;
    constexpr std::size_t cache_bytes = std::size_t{ 256 } << 20U;
    const std::size_t n = data.X.rows();
    const std::size_t C = data.n_classes;
    const double reg = p.real("C");
    const double gamma = p.real("gamma");
    const std::size_t max_updates = std::max<std::size_t>(1000, 50 * n);

    KernelCache cache{ data.X, gamma, cache_bytes };
    Matrix alpha_t(n, C, 0.0);
    std::size_t used = 0;
    bool converged_all = true;
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<std::size_t>(data.y[i]) == c ? 1.0 : -1.0;
        }
        std::vector<double> alpha(n, 0.0);
        // grad_i = t_i f(x_i) - 1 with f = sum_j alpha_j t_j (K_ij + 1)
        std::vector<double> grad(n, -1.0);
        bool converged = false;
        std::size_t updates = 0;
        while (updates < max_updates) {
            if (updates % 64 == 0) {
                ctx.deadline.check();
            }
            // pick the largest projected-gradient violation; ties to the lowest index
            std::size_t best = n;
            double best_violation = tolerance;
            for (std::size_t i = 0; i < n; ++i) {
                const double upper = reg * data.w[i];
                double pg = grad[i];
                if (alpha[i] <= 0.0) {
                    pg = std::min(pg, 0.0);
                } else if (alpha[i] >= upper) {
                    pg = std::max(pg, 0.0);
                }
                if (std::abs(pg) > best_violation) {
                    best_violation = std::abs(pg);
                    best = i;
                }
            }
            if (best == n) {
                converged = true;
                break;
            }
            const auto &col = cache.column(best);
            const double old = alpha[best];
            alpha[best] = std::clamp(old - grad[best] / col[best], 0.0, reg * data.w[best]);
            const double delta = (alpha[best] - old) * t[best];
            for (std::size_t k = 0; k < n; ++k) {
                grad[k] += delta * t[k] * col[k];
            }
            ++updates;
        }
        for (std::size_t i = 0; i < n; ++i) {
            alpha_t(i, c) = alpha[i] * t[i];
        }
        converged_all = converged_all && converged;
        used = std::max(used, updates);
    }

    std::vector<std::size_t> support_rows;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = alpha_t.row(i);
        if (std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; })) {
            support_rows.push_back(i);
        }
    }
    ctx.info.iterations = used;
    ctx.info.early_stopped = converged_all;
    return std::make_shared<RbfSvmClassifier>(data.X.select_rows(support_rows), alpha_t.select_rows(support_rows), gamma);
}

ClassifierPtr load_svm_rbf(const nlohmann::json &state) {
    const auto ns = state.at("n_support").get<std::size_t>();
    return std::make_shared<RbfSvmClassifier>(Matrix(ns, state.at("dim").get<std::size_t>(), state.at("support").get<std::vector<double>>()), Matrix(ns, state.at("n_classes").get<std::size_t>(), state.at("coef").get<std::vector<double>>()), state.at("gamma").get<double>());
}

}  // namespace driftml::learners::detail
