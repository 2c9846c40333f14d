#include "driftml/learners.hpp"
#include "learners/internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace driftml::learners {

namespace {

constexpr std::string_view model_format = "driftml.model";
constexpr int model_version = 1;

struct AlgorithmEntry {
    AlgorithmId id;
    std::string_view name;
    std::string_view display;
};

constexpr std::array<AlgorithmEntry, 12> entries{ {
    { AlgorithmId::decision_tree, "decision_tree", "Decision Tree" },
    { AlgorithmId::random_forest, "random_forest", "Random Forest" },
    { AlgorithmId::knn, "knn", "KNN" },
    { AlgorithmId::logistic_regression, "logistic_regression", "Logistic Regression" },
    { AlgorithmId::gaussian_nb, "gaussian_nb", "Gaussian NB" },
    { AlgorithmId::mlp, "mlp", "MLP" },
    { AlgorithmId::passive_aggressive, "passive_aggressive", "Passive Aggressive" },
    { AlgorithmId::gradient_boosting, "gradient_boosting", "Gradient Boosting" },
    { AlgorithmId::adaboost, "adaboost", "AdaBoost" },
    { AlgorithmId::bagging, "bagging", "Bagging" },
    { AlgorithmId::svm_linear, "svm_linear", "SVM (Linear)" },
    { AlgorithmId::svm_rbf, "svm_rbf", "SVM (RBF)" },
} };

const AlgorithmEntry &entry(AlgorithmId id) {
    return entries[static_cast<std::size_t>(id)];
}

std::vector<ParamDomain> tree_domains(const std::string &max_features_default) {
    return {
        ParamDomain::categorical("criterion", { "gini", "entropy" }, "gini"),
        ParamDomain::flag("limit_depth", false),
        ParamDomain::integer("max_depth", 2, 32, 8).when("limit_depth", { true }),
        ParamDomain::integer("min_samples_split", 2, 20, 2),
        ParamDomain::integer("min_samples_leaf", 1, 20, 1),
        ParamDomain::categorical("max_features", { "all", "sqrt", "log2", "half" }, max_features_default),
    };
}

ParamSpace build_space(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::decision_tree:
            return ParamSpace{ tree_domains("all") };
        case AlgorithmId::random_forest: {
            auto domains = tree_domains("sqrt");
            domains.insert(domains.begin(), ParamDomain::integer("n_estimators", 16, 256, 100, true));
            domains.push_back(ParamDomain::flag("bootstrap", true));
            return ParamSpace{ std::move(domains) };
        }
        case AlgorithmId::knn:
            return ParamSpace{ {
                ParamDomain::integer("n_neighbors", 1, 25, 5),
                ParamDomain::categorical("weights", { "uniform", "distance" }, "uniform"),
            } };
        case AlgorithmId::logistic_regression:
            return ParamSpace{ {
                ParamDomain::real("C", 1e-3, 1e3, 1.0, true),
                ParamDomain::integer("max_iter", 100, 1000, 100),
            } };
        case AlgorithmId::gaussian_nb:
            return ParamSpace{ { ParamDomain::real("var_smoothing", 1e-12, 1e-6, 1e-9, true) } };
        case AlgorithmId::mlp:
            return ParamSpace{ {
                ParamDomain::integer("hidden_layers", 1, 2, 1),
                ParamDomain::integer("hidden_width", 16, 256, 100, true),
                ParamDomain::categorical("activation", { "tanh", "relu" }, "tanh"),
                ParamDomain::real("learning_rate", 1e-4, 1e-1, 1e-3, true),
                ParamDomain::flag("early_stopping", true),
                ParamDomain::integer("max_iter", 20, 200, 200),
            } };
        case AlgorithmId::passive_aggressive:
            return ParamSpace{ {
                ParamDomain::real("C", 1e-3, 1e3, 1.0, true),
                ParamDomain::integer("max_iter", 10, 200, 100),
            } };
        case AlgorithmId::gradient_boosting:
            return ParamSpace{ {
                ParamDomain::integer("n_estimators", 16, 256, 100, true),
                ParamDomain::real("learning_rate", 1e-2, 1.0, 0.1, true),
                ParamDomain::integer("max_depth", 1, 8, 3),
            } };
        case AlgorithmId::adaboost:
            return ParamSpace{ {
                ParamDomain::integer("n_estimators", 16, 256, 50, true),
                ParamDomain::real("learning_rate", 1e-2, 1.0, 1.0, true),
                ParamDomain::integer("max_depth", 1, 8, 1),
            } };
        case AlgorithmId::bagging:
            return ParamSpace{ {
                ParamDomain::integer("n_estimators", 5, 50, 10),
                ParamDomain::real("subsample", 0.5, 1.0, 1.0),
            } };
        case AlgorithmId::svm_linear:
            return ParamSpace{ {
                ParamDomain::categorical("kernel", { "linear" }, "linear"),
                ParamDomain::real("C", 1e-2, 1e3, 1.0, true),
            } };
        case AlgorithmId::svm_rbf:
            return ParamSpace{ {
                ParamDomain::categorical("kernel", { "rbf" }, "rbf"),
                ParamDomain::real("C", 1e-2, 1e3, 1.0, true),
                ParamDomain::real("gamma", 1e-4, 1e1, 1e-2, true).when("kernel", { std::string{ "rbf" } }),
            } };
    }
    throw invalid_argument("unknown algorithm id");
}

using FitFn = detail::ClassifierPtr (*)(const detail::TrainingSet &, const ParamSet &, detail::FitContext);
using LoadFn = detail::ClassifierPtr (*)(const nlohmann::json &);

FitFn fit_function(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::decision_tree: return detail::fit_decision_tree;
        case AlgorithmId::random_forest: return detail::fit_random_forest;
        case AlgorithmId::knn: return detail::fit_knn;
        case AlgorithmId::logistic_regression: return detail::fit_logistic_regression;
        case AlgorithmId::gaussian_nb: return detail::fit_gaussian_nb;
        case AlgorithmId::mlp: return detail::fit_mlp;
        case AlgorithmId::passive_aggressive: return detail::fit_passive_aggressive;
        case AlgorithmId::gradient_boosting: return detail::fit_gradient_boosting;
        case AlgorithmId::adaboost: return detail::fit_adaboost;
        case AlgorithmId::bagging: return detail::fit_bagging;
        case AlgorithmId::svm_linear: return detail::fit_svm_linear;
        case AlgorithmId::svm_rbf: return detail::fit_svm_rbf;
    }
    throw invalid_argument("unknown algorithm id");
}

LoadFn load_function(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::decision_tree: return detail::load_decision_tree;
        case AlgorithmId::random_forest: return detail::load_random_forest;
        case AlgorithmId::knn: return detail::load_knn;
        case AlgorithmId::logistic_regression: return detail::load_logistic_regression;
        case AlgorithmId::gaussian_nb: return detail::load_gaussian_nb;
        case AlgorithmId::mlp: return detail::load_mlp;
        case AlgorithmId::passive_aggressive: return detail::load_passive_aggressive;
        case AlgorithmId::gradient_boosting: return detail::load_gradient_boosting;
        case AlgorithmId::adaboost: return detail::load_adaboost;
        case AlgorithmId::bagging: return detail::load_bagging;
        case AlgorithmId::svm_linear: return detail::load_svm_linear;
        case AlgorithmId::svm_rbf: return detail::load_svm_rbf;
    }
    throw invalid_argument("unknown algorithm id");
}

}  // namespace

std::string_view to_string(AlgorithmId id) noexcept { return entry(id).name; }

std::string_view display_name(AlgorithmId id) noexcept { return entry(id).display; }

AlgorithmId algorithm_from_string(std::string_view name) {
    for (const auto &e : entries) {
        if (e.name == name) {
            return e.id;
        }
    }
    throw config_error("unknown algorithm '" + std::string{ name } + "'");
}

const ParamSpace &default_space(AlgorithmId id) {
    static const std::array<ParamSpace, 12> spaces = [] {
        std::array<ParamSpace, 12> out;
        for (const auto a : all_algorithms) {
            out[static_cast<std::size_t>(a)] = build_space(a);
        }
        return out;
    }();
    return spaces[static_cast<std::size_t>(id)];
}

void softmax_rows(Matrix &scores) {
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        double m = -std::numeric_limits<double>::infinity();
        for (const double v : row) {
            m = std::max(m, v);
        }
        if (!std::isfinite(m)) {
            std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
            continue;
        }
        double total = 0.0;
        for (auto &v : row) {
            v = std::exp(v - m);
            total += v;
        }
        for (auto &v : row) {
            v /= total;
        }
    }
}

std::vector<int> labels_from_proba(const Matrix &proba, std::span<const int> classes) {
    if (proba.cols() != classes.size()) {
        throw invalid_argument("probability columns do not match the class list");
    }
    std::vector<int> out(proba.rows());
    for (std::size_t i = 0; i < proba.rows(); ++i) {
        out[i] = classes[argmax(proba.row(i))];
    }
    return out;
}

namespace detail {

Matrix ovr_softmax(Matrix decisions) {
    softmax_rows(decisions);
    return decisions;
}

void check_width(const Matrix &X, std::size_t expected) {
    if (X.cols() != expected) {
        throw invalid_argument("input has " + std::to_string(X.cols()) + " features, model expects " + std::to_string(expected));
    }
}

}  // namespace detail

TrainedModel::TrainedModel(AlgorithmId algorithm, ParamSet params, std::vector<int> classes, std::size_t input_dim, TrainingInfo info, std::shared_ptr<const detail::Classifier> impl) :
    algorithm_{ algorithm },
    params_{ std::move(params) },
    classes_{ std::move(classes) },
    input_dim_{ input_dim },
    info_{ info },
    impl_{ std::move(impl) } {}

Matrix TrainedModel::predict_proba(const Matrix &X) const {
    if (!impl_) {
        throw invalid_argument("model is not trained");
    }
    detail::check_width(X, input_dim_);
    return impl_->proba(X);
}

std::vector<int> TrainedModel::predict(const Matrix &X) const {
    return labels_from_proba(predict_proba(X), classes_);
}

nlohmann::json TrainedModel::to_json() const {
    if (!impl_) {
        throw invalid_argument("model is not trained");
    }
    return {
        { "format", model_format },
        { "version", model_version },
        { "algorithm", to_string(algorithm_) },
        { "params", params_.to_json() },
        { "classes", classes_ },
        { "input_dim", input_dim_ },
        { "info", { { "seed", info_.seed }, { "iterations", info_.iterations }, { "early_stopped", info_.early_stopped }, { "constant", info_.constant } } },
        { "state", impl_->state() },
    };
}

TrainedModel TrainedModel::from_json(const nlohmann::json &j) {
    if (j.value("format", "") != model_format || j.value("version", 0) != model_version) {
        throw parse_error("not a driftml model snapshot", 1, 1);
    }
    const AlgorithmId algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    TrainingInfo info;
    const auto &ji = j.at("info");
    info.seed = ji.at("seed").get<std::uint64_t>();
    info.iterations = ji.at("iterations").get<std::size_t>();
    info.early_stopped = ji.at("early_stopped").get<bool>();
    info.constant = ji.at("constant").get<bool>();
    auto impl = info.constant ? detail::load_constant(j.at("state")) : load_function(algorithm)(j.at("state"));
    return { algorithm, ParamSet::from_json(j.at("params")), j.at("classes").get<std::vector<int>>(), j.at("input_dim").get<std::size_t>(), info, std::move(impl) };
}

std::uint64_t TrainedModel::state_hash() const {
    const std::string text = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

TrainedModel train(AlgorithmId algorithm, const ParamSet &params, const Matrix &X, std::span<const int> y, std::span<const double> weights, std::uint64_t seed, const TrainOptions &options) {
    const std::size_t n = X.rows();
    if (n == 0 || X.cols() == 0) {
        throw invalid_argument("training matrix is empty");
    }
    if (y.size() != n) {
        throw invalid_argument("label count " + std::to_string(y.size()) + " does not match " + std::to_string(n) + " rows");
    }
    if (!weights.empty() && weights.size() != n) {
        throw invalid_argument("weight count does not match row count");
    }
    if (!std::all_of(X.data().begin(), X.data().end(), [](double v) { return std::isfinite(v); })) {
        throw invalid_argument("training matrix has non-finite entries");
    }

    const ParamSpace &space = default_space(algorithm);
    ParamSet resolved = space.complete(params);
    if (const auto why = space.violation(resolved); !why.empty()) {
        throw invalid_argument(std::string{ to_string(algorithm) } + ": " + why);
    }

    std::vector<int> classes = options.classes.empty() ? unique_labels(y) : options.classes;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::map<int, int> position;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        position[classes[c]] = static_cast<int>(c);
    }
    std::vector<int> encoded(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = position.find(y[i]);
        if (it == position.end()) {
            throw invalid_argument("label " + std::to_string(y[i]) + " is not in the class list");
        }
        encoded[i] = it->second;
    }

    std::vector<double> w(weights.begin(), weights.end());
    if (w.empty()) {
        w.assign(n, 1.0);
    }
    if (std::any_of(w.begin(), w.end(), [](double v) { return !(v >= 0.0) || !std::isfinite(v); })) {
        throw invalid_argument("sample weights must be finite and non-negative");
    }
    std::vector<double> class_weight(classes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        class_weight[static_cast<std::size_t>(encoded[i])] += w[i];
    }
    const auto present = static_cast<std::size_t>(std::count_if(class_weight.begin(), class_weight.end(), [](double v) { return v > 0.0; }));
    if (present == 0) {
        throw invalid_argument("sample weights are all zero");
    }

    TrainingInfo info;
    info.seed = seed;
    detail::ClassifierPtr impl;
    if (present == 1) {
        info.constant = true;
        const auto index = static_cast<std::size_t>(std::find_if(class_weight.begin(), class_weight.end(), [](double v) { return v > 0.0; }) - class_weight.begin());
        impl = detail::fit_constant(classes.size(), index);
    } else {
        options.deadline.check();
        const detail::TrainingSet data{ X, encoded, w, classes.size() };
        impl = fit_function(algorithm)(data, resolved, detail::FitContext{ seed, options.deadline, info });
    }
    return { algorithm, std::move(resolved), std::move(classes), X.cols(), info, std::move(impl) };
}

}  // namespace driftml::learners
