// Linear learners: multinomial logistic regression (L-BFGS), passive-aggressive (PA-I), linear SVM (dual coordinate descent).

#include "driftml/learners/objectives.hpp"
#include "learners/internal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace driftml::learners {

double objectives::logistic_objective(std::span<const double> coef, const Matrix &X, std::span<const int> y, std::span<const double> w, std::size_t n_classes, double C, std::span<double> grad) {
    const std::size_t d = X.cols();
    const std::size_t stride = d + 1;
    if (coef.size() != n_classes * stride || grad.size() != coef.size()) {
        throw invalid_argument("logistic coefficient size mismatch");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    std::vector<double> z(n_classes);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto x = X.row(i);
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double *wc = coef.data() + c * stride;
            double s = wc[d];
            for (std::size_t j = 0; j < d; ++j) {
                s += wc[j] * x[j];
            }
            z[c] = s;
        }
        const double zmax = *std::max_element(z.begin(), z.end());
        double norm = 0.0;
        for (auto &v : z) {
            v = std::exp(v - zmax);
            norm += v;
        }
        const auto yi = static_cast<std::size_t>(y[i]);
        loss += w[i] * (std::log(norm) - std::log(z[yi]));
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double r = w[i] * (z[c] / norm - (c == yi ? 1.0 : 0.0));
            double *gc = grad.data() + c * stride;
            for (std::size_t j = 0; j < d; ++j) {
                gc[j] += r * x[j];
            }
            gc[d] += r;
        }
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = coef[c * stride + j];
            loss += v * v / (2.0 * C);
            grad[c * stride + j] += v / C;
        }
    }
    return loss;
}

namespace detail {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Limited-memory BFGS with backtracking Armijo line search. Returns iterations used.
template <typename Objective>
std::size_t minimize_lbfgs(Objective &&f, std::vector<double> &x, std::size_t max_iter, const Deadline &deadline, bool &converged) {
    constexpr std::size_t memory = 10;
    const std::size_t n = x.size();
    std::vector<double> g(n);
    double fx = f(x, g);
    std::deque<std::vector<double>> s_hist;
    std::deque<std::vector<double>> y_hist;
    std::vector<double> dir(n);
    std::vector<double> x_new(n);
    std::vector<double> g_new(n);
    converged = false;

    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        deadline.check();
        const double gmax = std::accumulate(g.begin(), g.end(), 0.0, [](double m, double v) { return std::max(m, std::abs(v)); });
        if (gmax <= 1e-6 * std::max(1.0, std::abs(fx))) {
            converged = true;
            break;
        }
        // two-loop recursion
        std::copy(g.begin(), g.end(), dir.begin());
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alpha[k] = dot(s_hist[k], dir) / dot(y_hist[k], s_hist[k]);
            for (std::size_t j = 0; j < n; ++j) {
                dir[j] -= alpha[k] * y_hist[k][j];
            }
        }
        double gamma = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
        if (!s_hist.empty()) {
            gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
        }
        for (auto &v : dir) {
            v *= gamma;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = dot(y_hist[k], dir) / dot(y_hist[k], s_hist[k]);
            for (std::size_t j = 0; j < n; ++j) {
                dir[j] += s_hist[k][j] * (alpha[k] - beta);
            }
        }
        for (auto &v : dir) {
            v = -v;
        }
        double slope = dot(g, dir);
        if (slope >= 0.0) {
            // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            for (std::size_t j = 0; j < n; ++j) {
                dir[j] = -g[j] * gamma;
            }
            slope = dot(g, dir);
        }

        double step = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t j = 0; j < n; ++j) {
                x_new[j] = x[j] + step * dir[j];
            }
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            converged = true;
            break;
        }
        std::vector<double> s(n);
        std::vector<double> yv(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = x_new[j] - x[j];
            yv[j] = g_new[j] - g[j];
        }
        const double decrease = fx - f_new;
        x.swap(x_new);
        g.swap(g_new);
        fx = f_new;
        if (dot(s, yv) > 1e-12 * dot(yv, yv)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            if (s_hist.size() > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        if (decrease <= 1e-12 * std::max(1.0, std::abs(fx))) {
            converged = true;
            ++it;
            break;
        }
    }
    return it;
}

// Linear decision values X W^T + b; coef row-major n_out x (d + 1).
Matrix linear_scores(const Matrix &X, const std::vector<double> &coef, std::size_t n_out) {
    const std::size_t d = X.cols();
    Matrix out(X.rows(), n_out);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto x = X.row(i);
        for (std::size_t c = 0; c < n_out; ++c) {
            const double *wc = coef.data() + c * (d + 1);
            double s = wc[d];
            for (std::size_t j = 0; j < d; ++j) {
                s += wc[j] * x[j];
            }
            out(i, c) = s;
        }
    }
    return out;
}

// Shared by logistic regression (softmax of scores) and the one-vs-rest margin learners.
class LinearClassifier final : public Classifier {
  public:
    LinearClassifier(std::vector<double> coef, std::size_t n_classes, std::size_t dim) : coef_{ std::move(coef) }, n_classes_{ n_classes }, dim_{ dim } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override { return ovr_softmax(linear_scores(X, coef_, n_classes_)); }
    [[nodiscard]] nlohmann::json state() const override { return { { "n_classes", n_classes_ }, { "dim", dim_ }, { "coef", coef_ } }; }

  private:
    std::vector<double> coef_;
    std::size_t n_classes_;
    std::size_t dim_;
};

ClassifierPtr load_linear(const nlohmann::json &state) {
    return std::make_shared<LinearClassifier>(state.at("coef").get<std::vector<double>>(), state.at("n_classes").get<std::size_t>(), state.at("dim").get<std::size_t>());
}

std::vector<int> binary_targets(std::span<const int> y, std::size_t c) {
    std::vector<int> t(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        t[i] = static_cast<std::size_t>(y[i]) == c ? 1 : -1;
    }
    return t;
}

}  // namespace

ClassifierPtr fit_logistic_regression(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const std::size_t C = data.n_classes;
    const std::size_t d = data.X.cols();
    const double reg = p.real("C");
    std::vector<double> coef(C * (d + 1), 0.0);
    bool converged = false;
    auto objective = [&](const std::vector<double> &x, std::vector<double> &g) {
        return objectives::logistic_objective(x, data.X, data.y, data.w, C, reg, g);
    };
    ctx.info.iterations = minimize_lbfgs(objective, coef, static_cast<std::size_t>(p.integer("max_iter")), ctx.deadline, converged);
    ctx.info.early_stopped = converged;
    return std::make_shared<LinearClassifier>(std::move(coef), C, d);
}

ClassifierPtr load_logistic_regression(const nlohmann::json &state) { return load_linear(state); }

ClassifierPtr fit_passive_aggressive(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const std::size_t n = data.X.rows();
    const std::size_t d = data.X.cols();
    const std::size_t C = data.n_classes;
    const double aggressiveness = p.real("C");
    const auto epochs = static_cast<std::size_t>(p.integer("max_iter"));

    std::vector<double> sq_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        sq_norm[i] = dot(data.X.row(i), data.X.row(i)) + 1.0;
    }
    std::vector<double> coef(C * (d + 1), 0.0);
    std::size_t used = 0;
    bool settled = true;
    for (std::size_t c = 0; c < C; ++c) {
        const auto t = binary_targets(data.y, c);
        double *wc = coef.data() + c * (d + 1);
        rng_type rng{ mix_seed(ctx.seed, c) };
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{ 0 });
        std::size_t epoch = 0;
        for (; epoch < epochs; ++epoch) {
            ctx.deadline.check();
            shuffle(order, rng);
            std::size_t updates = 0;
            for (const std::size_t i : order) {
                const auto x = data.X.row(i);
                double s = wc[d];
                for (std::size_t j = 0; j < d; ++j) {
                    s += wc[j] * x[j];
                }
                const double loss = 1.0 - t[i] * s;
                if (loss <= 0.0) {
                    continue;
                }
                const double tau = std::min(aggressiveness * data.w[i], loss / sq_norm[i]) * t[i];
                for (std::size_t j = 0; j < d; ++j) {
                    wc[j] += tau * x[j];
                }
                wc[d] += tau;
                ++updates;
            }
            if (updates == 0) {
                ++epoch;
                break;
            }
        }
        settled = settled && epoch < epochs;
        used = std::max(used, epoch);
    }
    ctx.info.iterations = used;
    ctx.info.early_stopped = settled;
    return std::make_shared<LinearClassifier>(std::move(coef), C, d);
}

ClassifierPtr load_passive_aggressive(const nlohmann::json &state) { return load_linear(state); }

ClassifierPtr fit_svm_linear(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    constexpr std::size_t max_epochs = 1000;
    constexpr double tolerance = 1e-3;
    const std::size_t n = data.X.rows();
    const std::size_t d = data.X.cols();
    const std::size_t C = data.n_classes;
    const double reg = p.real("C");

    // the bias rides along as a constant feature of value 1
    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        q_diag[i] = dot(data.X.row(i), data.X.row(i)) + 1.0;
    }
    std::vector<double> coef(C * (d + 1), 0.0);
    std::size_t used = 0;
    bool converged_all = true;
    for (std::size_t c = 0; c < C; ++c) {
        const auto t = binary_targets(data.y, c);
        double *wc = coef.data() + c * (d + 1);
        std::vector<double> alpha(n, 0.0);
        rng_type rng{ mix_seed(ctx.seed, c) };
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{ 0 });
        bool converged = false;
        std::size_t epoch = 0;
        for (; epoch < max_epochs && !converged; ++epoch) {
            ctx.deadline.check();
            shuffle(order, rng);
            double pg_max = -1e300;
            double pg_min = 1e300;
            for (const std::size_t i : order) {
                const double upper = reg * data.w[i];
                const auto x = data.X.row(i);
                double s = wc[d];
                for (std::size_t j = 0; j < d; ++j) {
                    s += wc[j] * x[j];
                }
                const double grad = t[i] * s - 1.0;
                double pg = grad;
                if (alpha[i] <= 0.0) {
                    pg = std::min(grad, 0.0);
                } else if (alpha[i] >= upper) {
                    pg = std::max(grad, 0.0);
                }
                pg_max = std::max(pg_max, pg);
                pg_min = std::min(pg_min, pg);
                if (pg == 0.0) {
                    continue;
                }
                const double old = alpha[i];
                alpha[i] = std::clamp(old - grad / q_diag[i], 0.0, upper);
                const double delta = (alpha[i] - old) * t[i];
                for (std::size_t j = 0; j < d; ++j) {
                    wc[j] += delta * x[j];
                }
                wc[d] += delta;
            }
            converged = pg_max - pg_min <= tolerance;
        }
        converged_all = converged_all && converged;
        used = std::max(used, epoch);
    }
    ctx.info.iterations = used;
    ctx.info.early_stopped = converged_all;
    return std::make_shared<LinearClassifier>(std::move(coef), C, d);
}

ClassifierPtr load_svm_linear(const nlohmann::json &state) { return load_linear(state); }

}  // namespace detail

}  // namespace driftml::learners
