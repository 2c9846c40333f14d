// Multi-layer perceptron trained with Adam on minibatches, optional early stopping on a validation slice.

#include "driftml/learners/objectives.hpp"
#include "learners/internal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace driftml::learners {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

void check_shape(const objectives::MlpShape &shape, std::size_t param_count) {
    if (shape.layers.size() < 2) {
        throw invalid_argument("mlp needs input and output layers");
    }
    if (param_count != objectives::mlp_parameter_count(shape)) {
        throw invalid_argument("mlp parameter vector has the wrong size");
    }
}

RowMatrix as_eigen(const Matrix &X) {
    return ConstMap(X.data().data(), static_cast<Eigen::Index>(X.rows()), static_cast<Eigen::Index>(X.cols()));
}

// Forward pass keeping every layer's activation (index 0 is the input).
std::vector<RowMatrix> forward_all(const objectives::MlpShape &shape, std::span<const double> params, RowMatrix input) {
    std::vector<RowMatrix> acts;
    acts.push_back(std::move(input));
    std::size_t offset = 0;
    const std::size_t L = shape.layers.size() - 1;
    for (std::size_t l = 0; l < L; ++l) {
        const auto fan_in = static_cast<Eigen::Index>(shape.layers[l]);
        const auto fan_out = static_cast<Eigen::Index>(shape.layers[l + 1]);
        const ConstMap W(params.data() + offset, fan_in, fan_out);
        offset += static_cast<std::size_t>(fan_in * fan_out);
        const Eigen::Map<const Eigen::RowVectorXd> b(params.data() + offset, fan_out);
        offset += static_cast<std::size_t>(fan_out);
        RowMatrix Z = acts.back() * W;
        Z.rowwise() += b;
        if (l + 1 < L) {
            if (shape.tanh) {
                Z = Z.array().tanh();
            } else {
                Z = Z.array().max(0.0);
            }
        } else {
            for (Eigen::Index i = 0; i < Z.rows(); ++i) {
                const double m = Z.row(i).maxCoeff();
                Z.row(i) = (Z.row(i).array() - m).exp();
                Z.row(i) /= Z.row(i).sum();
            }
        }
        acts.push_back(std::move(Z));
    }
    return acts;
}

double objective_eigen(const objectives::MlpShape &shape, std::span<const double> params, const RowMatrix &X, std::span<const int> y, std::span<const double> w, std::span<double> grad) {
    const auto acts = forward_all(shape, params, X);
    const auto n = static_cast<double>(X.rows());
    const double total_w = std::accumulate(w.begin(), w.end(), 0.0);
    const RowMatrix &P = acts.back();

    double loss = 0.0;
    RowMatrix delta = P;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const auto yi = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
        const double wi = w[static_cast<std::size_t>(i)] / total_w;
        loss -= wi * std::log(std::max(P(i, yi), 1e-300));
        delta(i, yi) -= 1.0;
        delta.row(i) *= wi;
    }

    const std::size_t L = shape.layers.size() - 1;
    std::vector<std::size_t> offsets(L);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offsets[l] = offset;
        offset += shape.layers[l] * shape.layers[l + 1] + shape.layers[l + 1];
    }
    for (std::size_t l = L; l-- > 0;) {
        const auto fan_in = static_cast<Eigen::Index>(shape.layers[l]);
        const auto fan_out = static_cast<Eigen::Index>(shape.layers[l + 1]);
        const ConstMap W(params.data() + offsets[l], fan_in, fan_out);
        Map gW(grad.data() + offsets[l], fan_in, fan_out);
        Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + offsets[l] + static_cast<std::size_t>(fan_in * fan_out), fan_out);

        loss += shape.alpha * W.squaredNorm() / (2.0 * n);
        gW = acts[l].transpose() * delta + (shape.alpha / n) * W;
        gb = delta.colwise().sum();
        if (l > 0) {
            RowMatrix back = delta * W.transpose();
            const RowMatrix &A = acts[l];
            if (shape.tanh) {
                back.array() *= 1.0 - A.array().square();
            } else {
                back.array() *= (A.array() > 0.0).cast<double>();
            }
            delta = std::move(back);
        }
    }
    return loss;
}

}  // namespace

std::size_t objectives::mlp_parameter_count(const MlpShape &shape) {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < shape.layers.size(); ++l) {
        count += shape.layers[l] * shape.layers[l + 1] + shape.layers[l + 1];
    }
    return count;
}

Matrix objectives::mlp_forward(const MlpShape &shape, std::span<const double> params, const Matrix &X) {
    check_shape(shape, params.size());
    if (X.cols() != shape.layers.front()) {
        throw invalid_argument("mlp input width mismatch");
    }
    const auto acts = forward_all(shape, params, as_eigen(X));
    const RowMatrix &P = acts.back();
    Matrix out(X.rows(), shape.layers.back());
    Map(out.data().data(), P.rows(), P.cols()) = P;
    return out;
}

double objectives::mlp_objective(const MlpShape &shape, std::span<const double> params, const Matrix &X, std::span<const int> y, std::span<const double> w, std::span<double> grad) {
    check_shape(shape, params.size());
    if (grad.size() != params.size() || y.size() != X.rows() || w.size() != X.rows()) {
        throw invalid_argument("mlp objective size mismatch");
    }
    return objective_eigen(shape, params, as_eigen(X), y, w, grad);
}

namespace detail {

namespace {

class MlpClassifier final : public Classifier {
  public:
    MlpClassifier(objectives::MlpShape shape, std::vector<double> params) : shape_{ std::move(shape) }, params_{ std::move(params) } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override { return objectives::mlp_forward(shape_, params_, X); }
    [[nodiscard]] nlohmann::json state() const override { return { { "layers", shape_.layers }, { "tanh", shape_.tanh }, { "alpha", shape_.alpha }, { "params", params_ } }; }

  private:
    objectives::MlpShape shape_;
    std::vector<double> params_;
};

std::vector<double> glorot_init(const objectives::MlpShape &shape, rng_type &rng) {
    std::vector<double> params;
    params.reserve(objectives::mlp_parameter_count(shape));
    for (std::size_t l = 0; l + 1 < shape.layers.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(shape.layers[l] + shape.layers[l + 1]));
        const std::size_t count = shape.layers[l] * shape.layers[l + 1] + shape.layers[l + 1];
        for (std::size_t k = 0; k < count; ++k) {
            params.push_back((2.0 * uniform01(rng) - 1.0) * bound);
        }
    }
    return params;
}

}  // namespace

ClassifierPtr fit_mlp(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    constexpr std::size_t batch_size = 200;
    constexpr std::size_t patience = 10;
    constexpr double min_improvement = 1e-4;
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double adam_eps = 1e-8;

    objectives::MlpShape shape;
    shape.layers.push_back(data.X.cols());
    const auto width = static_cast<std::size_t>(p.integer("hidden_width"));
    for (std::int64_t l = 0; l < p.integer("hidden_layers"); ++l) {
        shape.layers.push_back(width);
    }
    shape.layers.push_back(data.n_classes);
    shape.tanh = p.choice("activation") == "tanh";
    shape.alpha = 1e-4;
    const double lr = p.real("learning_rate");
    const auto max_epochs = static_cast<std::size_t>(p.integer("max_iter"));

    rng_type rng{ mix_seed(ctx.seed, 0) };
    std::vector<double> params = glorot_init(shape, rng);

    const std::size_t n = data.X.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    shuffle(order, rng);
    const bool use_validation = p.flag("early_stopping") && n >= 10;
    const std::size_t n_val = use_validation ? std::max<std::size_t>(1, n / 10) : 0;
    std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(fit_rows.begin(), fit_rows.end());

    const RowMatrix X_all = as_eigen(data.X);
    RowMatrix X_val(static_cast<Eigen::Index>(n_val), X_all.cols());
    for (std::size_t i = 0; i < n_val; ++i) {
        X_val.row(static_cast<Eigen::Index>(i)) = X_all.row(static_cast<Eigen::Index>(val_rows[i]));
    }

    std::vector<double> m(params.size(), 0.0);
    std::vector<double> v(params.size(), 0.0);
    std::vector<double> grad(params.size());
    std::vector<double> best_params = params;
    double best_score = -1e300;
    std::size_t stall = 0;
    std::size_t step = 0;
    std::size_t epoch = 0;
    bool stopped = false;

    RowMatrix Xb;
    std::vector<int> yb;
    std::vector<double> wb;
    for (; epoch < max_epochs; ++epoch) {
        shuffle(fit_rows, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < fit_rows.size(); start += batch_size) {
            ctx.deadline.check();
            const std::size_t stop = std::min(fit_rows.size(), start + batch_size);
            Xb.resize(static_cast<Eigen::Index>(stop - start), X_all.cols());
            yb.clear();
            wb.clear();
            for (std::size_t k = start; k < stop; ++k) {
                Xb.row(static_cast<Eigen::Index>(k - start)) = X_all.row(static_cast<Eigen::Index>(fit_rows[k]));
                yb.push_back(data.y[fit_rows[k]]);
                wb.push_back(data.w[fit_rows[k]]);
            }
            if (std::accumulate(wb.begin(), wb.end(), 0.0) <= 0.0) {
                continue;
            }
            epoch_loss += objective_eigen(shape, params, Xb, yb, wb, grad) * static_cast<double>(stop - start);
            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < params.size(); ++k) {
                m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
                params[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + adam_eps);
            }
        }

        double score = 0.0;
        if (use_validation) {
            const auto P = forward_all(shape, params, X_val).back();
            double hit = 0.0;
            double total = 0.0;
            for (std::size_t i = 0; i < n_val; ++i) {
                Eigen::Index pred = 0;
                P.row(static_cast<Eigen::Index>(i)).maxCoeff(&pred);
                total += data.w[val_rows[i]];
                hit += pred == data.y[val_rows[i]] ? data.w[val_rows[i]] : 0.0;
            }
            score = total > 0.0 ? hit / total : 0.0;
        } else {
            score = -epoch_loss / static_cast<double>(std::max<std::size_t>(1, fit_rows.size()));
        }
        if (score > best_score + min_improvement) {
            best_score = score;
            stall = 0;
            if (use_validation) {
                best_params = params;
            }
        } else if (++stall >= patience) {
            stopped = true;
            ++epoch;
            break;
        }
    }
    if (use_validation) {
        params = best_params;
    }
    ctx.info.iterations = epoch;
    ctx.info.early_stopped = stopped;
    return std::make_shared<MlpClassifier>(std::move(shape), std::move(params));
}

ClassifierPtr load_mlp(const nlohmann::json &state) {
    objectives::MlpShape shape;
    shape.layers = state.at("layers").get<std::vector<std::size_t>>();
    shape.tanh = state.at("tanh").get<bool>();
    shape.alpha = state.at("alpha").get<double>();
    return std::make_shared<MlpClassifier>(std::move(shape), state.at("params").get<std::vector<double>>());
}

}  // namespace detail

}  // namespace driftml::learners
