// k-nearest neighbours and Gaussian naive Bayes.

#include "learners/internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace driftml::learners::detail {

namespace {

class KnnClassifier final : public Classifier {
  public:
    KnnClassifier(Matrix X, std::vector<int> y, std::vector<double> w, std::size_t n_classes, std::size_t k, bool distance_weighted) :
        X_{ std::move(X) },
        y_{ std::move(y) },
        w_{ std::move(w) },
        n_classes_{ n_classes },
        k_{ std::min(k, X_.rows()) },
        distance_weighted_{ distance_weighted } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        Matrix out(X.rows(), n_classes_, 0.0);
        std::vector<std::pair<double, std::size_t>> dist(X_.rows());
        for (std::size_t q = 0; q < X.rows(); ++q) {
            const auto x = X.row(q);
            for (std::size_t i = 0; i < X_.rows(); ++i) {
                const auto t = X_.row(i);
                double s = 0.0;
                for (std::size_t j = 0; j < x.size(); ++j) {
                    const double diff = x[j] - t[j];
                    s += diff * diff;
                }
                dist[i] = { s, i };
            }
            // pair ordering puts equal distances in training order
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());

            auto row = out.row(q);
            const bool exact_hit = distance_weighted_ && dist[0].first == 0.0;
            for (std::size_t r = 0; r < k_; ++r) {
                const auto [d2, i] = dist[r];
                double vote = w_[i];
                if (exact_hit) {
                    vote = d2 == 0.0 ? vote : 0.0;
                } else if (distance_weighted_) {
                    vote /= std::sqrt(d2);
                }
                row[static_cast<std::size_t>(y_[i])] += vote;
            }
            const double total = std::accumulate(row.begin(), row.end(), 0.0);
            for (auto &v : row) {
                v = total > 0.0 ? v / total : 1.0 / static_cast<double>(n_classes_);
            }
        }
        return out;
    }

    [[nodiscard]] nlohmann::json state() const override {
        return { { "rows", X_.rows() }, { "cols", X_.cols() }, { "X", X_.data() }, { "y", y_ }, { "w", w_ }, { "n_classes", n_classes_ }, { "k", k_ }, { "distance_weighted", distance_weighted_ } };
    }

  private:
    Matrix X_;
    std::vector<int> y_;
    std::vector<double> w_;
    std::size_t n_classes_;
    std::size_t k_;
    bool distance_weighted_;
};

class GaussianNbClassifier final : public Classifier {
  public:
    GaussianNbClassifier(Matrix mean, Matrix var, std::vector<double> log_prior) : mean_{ std::move(mean) }, var_{ std::move(var) }, log_prior_{ std::move(log_prior) } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        const std::size_t C = log_prior_.size();
        Matrix out(X.rows(), C);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const auto x = X.row(i);
            auto row = out.row(i);
            for (std::size_t c = 0; c < C; ++c) {
                if (!std::isfinite(log_prior_[c])) {
                    row[c] = -std::numeric_limits<double>::infinity();
                    continue;
                }
                double ll = log_prior_[c];
                for (std::size_t j = 0; j < x.size(); ++j) {
                    const double v = var_(c, j);
                    const double diff = x[j] - mean_(c, j);
                    ll -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + diff * diff / v);
                }
                row[c] = ll;
            }
        }
        softmax_rows(out);
        return out;
    }

    [[nodiscard]] nlohmann::json state() const override {
        return { { "classes", mean_.rows() }, { "cols", mean_.cols() }, { "mean", mean_.data() }, { "var", var_.data() }, { "log_prior", log_prior_ } };
    }

  private:
    Matrix mean_;
    Matrix var_;
    std::vector<double> log_prior_;
};

}  // namespace

ClassifierPtr fit_knn(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    ctx.info.iterations = 0;
    return std::make_shared<KnnClassifier>(data.X, std::vector<int>(data.y.begin(), data.y.end()), std::vector<double>(data.w.begin(), data.w.end()), data.n_classes, static_cast<std::size_t>(p.integer("n_neighbors")), p.choice("weights") == "distance");
}

ClassifierPtr load_knn(const nlohmann::json &state) {
    Matrix X(state.at("rows").get<std::size_t>(), state.at("cols").get<std::size_t>(), state.at("X").get<std::vector<double>>());
    return std::make_shared<KnnClassifier>(std::move(X), state.at("y").get<std::vector<int>>(), state.at("w").get<std::vector<double>>(), state.at("n_classes").get<std::size_t>(), state.at("k").get<std::size_t>(), state.at("distance_weighted").get<bool>());
}

ClassifierPtr fit_gaussian_nb(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const std::size_t n = data.X.rows();
    const std::size_t d = data.X.cols();
    const std::size_t C = data.n_classes;

    // epsilon is var_smoothing times the largest weighted variance over all rows
    const double total_w = std::accumulate(data.w.begin(), data.w.end(), 0.0);
    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m += data.w[i] * data.X(i, j);
        }
        m /= total_w;
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = data.X(i, j) - m;
            v += data.w[i] * diff * diff;
        }
        max_var = std::max(max_var, v / total_w);
    }
    const double epsilon = p.real("var_smoothing") * (max_var > 0.0 ? max_var : 1.0);

    Matrix mean(C, d, 0.0);
    Matrix var(C, d, 0.0);
    std::vector<double> class_w(C, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(data.y[i]);
        class_w[c] += data.w[i];
        for (std::size_t j = 0; j < d; ++j) {
            mean(c, j) += data.w[i] * data.X(i, j);
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            mean(c, j) = class_w[c] > 0.0 ? mean(c, j) / class_w[c] : 0.0;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(data.y[i]);
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = data.X(i, j) - mean(c, j);
            var(c, j) += data.w[i] * diff * diff;
        }
    }
    std::vector<double> log_prior(C);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            var(c, j) = (class_w[c] > 0.0 ? var(c, j) / class_w[c] : 0.0) + epsilon;
        }
        log_prior[c] = class_w[c] > 0.0 ? std::log(class_w[c] / total_w) : -std::numeric_limits<double>::infinity();
    }
    ctx.info.iterations = 1;
    return std::make_shared<GaussianNbClassifier>(std::move(mean), std::move(var), std::move(log_prior));
}

ClassifierPtr load_gaussian_nb(const nlohmann::json &state) {
    const auto C = state.at("classes").get<std::size_t>();
    const auto d = state.at("cols").get<std::size_t>();
    std::vector<double> log_prior;
    for (const auto &v : state.at("log_prior")) {
        log_prior.push_back(v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>());
    }
    return std::make_shared<GaussianNbClassifier>(Matrix(C, d, state.at("mean").get<std::vector<double>>()), Matrix(C, d, state.at("var").get<std::vector<double>>()), std::move(log_prior));
}

}  // namespace driftml::learners::detail
