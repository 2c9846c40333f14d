#include "driftml/search.hpp"

#include "driftml/metrics.hpp"
#include "learners/tree.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

namespace driftml::search {

namespace {

constexpr std::string_view pre_prefix = "pre:";

std::string prefixed(learners::AlgorithmId a, const std::string &name) {
    return std::string{ learners::to_string(a) } + ":" + name;
}

std::vector<ParamDomain> preprocessing_domains(std::size_t feature_dim) {
    std::vector<std::string> steps{ "none", "polynomial" };
    if (feature_dim >= 2) {
        steps.emplace_back("agglomeration");
    }
    steps.emplace_back("pca");
    std::vector<ParamDomain> d{
        ParamDomain::categorical("pre:imputation", { "mean", "median", "most_frequent" }, "mean"),
        ParamDomain::categorical("pre:scaling", { "standardize", "minmax", "none" }, "standardize"),
        ParamDomain::categorical("pre:feature_step", steps, "none"),
        ParamDomain::flag("pre:interaction_only", false).when("pre:feature_step", { std::string{ "polynomial" } }),
    };
    if (feature_dim >= 2) {
        const auto dim = static_cast<std::int64_t>(feature_dim);
        d.push_back(ParamDomain::integer("pre:cluster_count", 1, dim, std::max<std::int64_t>(1, dim / 2), true).when("pre:feature_step", { std::string{ "agglomeration" } }));
    }
    d.push_back(ParamDomain::real("pre:pca_variance", 0.5, 0.999, 0.95).when("pre:feature_step", { std::string{ "pca" } }));
    d.push_back(ParamDomain::categorical("pre:balancing", { "none", "inverse_frequency_weights" }, "none"));
    return d;
}

std::size_t width_of(const ParamDomain &d) {
    return d.kind == ParamKind::categorical ? d.choices.size() : 1;
}

double scaled(const ParamDomain &d, double v) {
    if (d.high <= d.low) {
        return 0.5;
    }
    if (d.log_scale) {
        return (std::log(v) - std::log(d.low)) / (std::log(d.high) - std::log(d.low));
    }
    return (v - d.low) / (d.high - d.low);
}

double clock_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::warmstart: return "warmstart";
        case Provenance::random: return "random";
        case Provenance::surrogate: return "surrogate";
    }
    return "random";
}

std::string_view to_string(TrialStatus s) noexcept {
    switch (s) {
        case TrialStatus::ok: return "ok";
        case TrialStatus::timeout: return "timeout";
        case TrialStatus::failed: return "failed";
    }
    return "failed";
}

Provenance provenance_from_string(std::string_view s) {
    for (const auto p : { Provenance::warmstart, Provenance::random, Provenance::surrogate }) {
        if (to_string(p) == s) {
            return p;
        }
    }
    throw config_error("unknown provenance '" + std::string{ s } + "'");
}

nlohmann::json Configuration::to_json() const {
    return { { "algorithm", learners::to_string(algorithm) }, { "params", params.to_json() }, { "preprocess", preprocess.to_json() }, { "provenance", to_string(provenance) } };
}

Configuration Configuration::from_json(const nlohmann::json &j) {
    Configuration c;
    c.algorithm = learners::algorithm_from_string(j.at("algorithm").get<std::string>());
    c.params = ParamSet::from_json(j.value("params", nlohmann::json::object()));
    c.preprocess = j.contains("preprocess") ? preprocess::PreprocessConfig::from_json(j.at("preprocess")) : preprocess::pinned_config();
    c.provenance = provenance_from_string(j.value("provenance", "random"));
    return c;
}

bool Configuration::same_point(const Configuration &other) const {
    return algorithm == other.algorithm && params == other.params && preprocess == other.preprocess;
}

SearchSpace::SearchSpace(std::vector<learners::AlgorithmId> algorithms, bool search_preprocessing, std::size_t feature_dim) :
    algorithms_{ std::move(algorithms) },
    search_preprocessing_{ search_preprocessing } {
    if (algorithms_.empty()) {
        throw config_error("the search space needs at least one algorithm");
    }
    std::vector<std::string> names;
    for (const auto a : algorithms_) {
        names.emplace_back(learners::to_string(a));
    }
    std::vector<ParamDomain> domains{ ParamDomain::categorical("algorithm", names, names.front()) };
    for (const auto a : algorithms_) {
        for (auto d : learners::default_space(a).domains()) {
            if (d.condition) {
                d.condition->parent = prefixed(a, d.condition->parent);
            } else {
                d.condition = ParamCondition{ "algorithm", { std::string{ learners::to_string(a) } } };
            }
            d.name = prefixed(a, d.name);
            domains.push_back(std::move(d));
        }
    }
    if (search_preprocessing_) {
        auto pre = preprocessing_domains(feature_dim);
        domains.insert(domains.end(), pre.begin(), pre.end());
    }
    joint_ = ParamSpace{ std::move(domains) };
    for (const auto &d : joint_.domains()) {
        encoded_width_ += width_of(d);
    }
}

void SearchSpace::pin(const std::string &name, const ParamValue &value) {
    std::vector<ParamDomain> domains = joint_.domains();
    const auto it = std::find_if(domains.begin(), domains.end(), [&](const ParamDomain &d) { return d.name == name; });
    if (it == domains.end()) {
        throw config_error("cannot pin unknown parameter '" + name + "'");
    }
    if (!it->admits(value)) {
        throw config_error("pinned value for '" + name + "' lies outside its domain");
    }
    switch (it->kind) {
        case ParamKind::categorical:
            it->choices = { std::get<std::string>(value) };
            break;
        case ParamKind::integer:
            it->low = it->high = static_cast<double>(std::get<std::int64_t>(value));
            break;
        case ParamKind::real:
            it->low = it->high = std::get<double>(value);
            break;
        case ParamKind::flag:
            throw config_error("flags cannot be pinned: '" + name + "'");
    }
    it->default_value = value;
    joint_ = ParamSpace{ std::move(domains) };
    encoded_width_ = 0;
    for (const auto &d : joint_.domains()) {
        encoded_width_ += width_of(d);
    }
}

ParamSet SearchSpace::to_assignment(const Configuration &cfg) const {
    ParamSet a;
    a.set("algorithm", std::string{ learners::to_string(cfg.algorithm) });
    for (const auto &[name, value] : cfg.params) {
        a.set(prefixed(cfg.algorithm, name), value);
    }
    if (search_preprocessing_) {
        const auto &p = cfg.preprocess;
        a.set("pre:imputation", std::string{ preprocess::to_string(p.imputation) });
        a.set("pre:scaling", std::string{ preprocess::to_string(p.scaling) });
        a.set("pre:feature_step", std::string{ preprocess::to_string(p.feature_step.kind) });
        a.set("pre:balancing", std::string{ preprocess::to_string(p.balancing) });
        switch (p.feature_step.kind) {
            case preprocess::FeatureStepKind::polynomial:
                a.set("pre:interaction_only", p.feature_step.interaction_only);
                break;
            case preprocess::FeatureStepKind::agglomeration:
                a.set("pre:cluster_count", static_cast<std::int64_t>(p.feature_step.cluster_count));
                break;
            case preprocess::FeatureStepKind::pca:
                a.set("pre:pca_variance", p.feature_step.pca_variance_fraction);
                break;
            case preprocess::FeatureStepKind::none:
                break;
        }
    }
    return a;
}

Configuration SearchSpace::to_configuration(const ParamSet &assignment, Provenance provenance) const {
    Configuration c;
    c.provenance = provenance;
    c.algorithm = learners::algorithm_from_string(assignment.choice("algorithm"));
    const std::string head = std::string{ learners::to_string(c.algorithm) } + ":";
    for (const auto &[name, value] : assignment) {
        if (name.rfind(head, 0) == 0) {
            c.params.set(name.substr(head.size()), value);
        }
    }
    if (!search_preprocessing_) {
        c.preprocess = preprocess::pinned_config();
        return c;
    }
    auto &p = c.preprocess;
    p.imputation = preprocess::imputation_from_string(assignment.choice("pre:imputation"));
    p.scaling = preprocess::scaling_from_string(assignment.choice("pre:scaling"));
    p.balancing = preprocess::balancing_from_string(assignment.choice("pre:balancing"));
    p.feature_step.kind = preprocess::feature_step_from_string(assignment.choice("pre:feature_step"));
    switch (p.feature_step.kind) {
        case preprocess::FeatureStepKind::polynomial:
            p.feature_step.interaction_only = assignment.flag("pre:interaction_only");
            break;
        case preprocess::FeatureStepKind::agglomeration:
            p.feature_step.cluster_count = static_cast<std::size_t>(assignment.integer("pre:cluster_count"));
            break;
        case preprocess::FeatureStepKind::pca:
            p.feature_step.pca_variance_fraction = assignment.real("pre:pca_variance");
            break;
        case preprocess::FeatureStepKind::none:
            break;
    }
    return c;
}

Configuration SearchSpace::sample(rng_type &rng) const {
    return to_configuration(joint_.sample(rng), Provenance::random);
}

std::string SearchSpace::violation(const Configuration &cfg) const {
    if (std::find(algorithms_.begin(), algorithms_.end(), cfg.algorithm) == algorithms_.end()) {
        return "algorithm '" + std::string{ learners::to_string(cfg.algorithm) } + "' is not in the space";
    }
    if (!search_preprocessing_ && !(cfg.preprocess == preprocess::pinned_config())) {
        return "preprocessing must be the pinned pipeline";
    }
    const ParamSet a = to_assignment(cfg);
    if (auto why = joint_.violation(a); !why.empty()) {
        return why;
    }
    if (!to_configuration(a, cfg.provenance).same_point(cfg)) {
        return "preprocessing has settings the space cannot express";
    }
    return {};
}

std::vector<double> SearchSpace::encode(const Configuration &cfg) const {
    const ParamSet a = to_assignment(cfg);
    std::vector<double> out;
    out.reserve(encoded_width_);
    for (const auto &d : joint_.domains()) {
        const bool on = joint_.active(d, a) && a.contains(d.name);
        switch (d.kind) {
            case ParamKind::categorical: {
                const std::string *v = on ? &a.choice(d.name) : nullptr;
                for (const auto &choice : d.choices) {
                    out.push_back(v == nullptr ? -1.0 : (*v == choice ? 1.0 : 0.0));
                }
                break;
            }
            case ParamKind::flag:
                out.push_back(on ? (a.flag(d.name) ? 1.0 : 0.0) : -1.0);
                break;
            case ParamKind::integer:
            case ParamKind::real:
                out.push_back(on ? scaled(d, a.real(d.name)) : -1.0);
                break;
        }
    }
    return out;
}

struct ForestSurrogate::Impl {
    std::vector<learners::detail::Tree> trees;
};

void ForestSurrogate::fit(const Matrix &rows, std::span<const double> scores, std::uint64_t seed, const Options &options) {
    if (rows.rows() == 0 || rows.rows() != scores.size()) {
        throw invalid_argument("surrogate needs one score per encoded row");
    }
    namespace ld = learners::detail;
    const auto binned = ld::BinnedMatrix::build(rows);
    const std::size_t n = rows.rows();
    std::vector<double> g(n);
    const std::vector<double> h(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = -scores[i];
    }
    ld::TreeParams params;
    params.random_thresholds = true;
    auto impl = std::make_shared<Impl>();
    std::vector<std::size_t> sample(n);
    for (std::size_t t = 0; t < options.trees; ++t) {
        rng_type rng{ mix_seed(seed, t) };
        for (std::size_t i = 0; i < n; ++i) {
            sample[i] = options.bootstrap ? uniform_index(rng, n) : i;
        }
        impl->trees.push_back(ld::build_regression_tree(binned, g, h, sample, params, rng, Deadline{}));
    }
    impl_ = std::move(impl);
}

std::pair<double, double> ForestSurrogate::predict(std::span<const double> x) const {
    if (!impl_) {
        throw invalid_argument("surrogate is not fitted");
    }
    double mean = 0.0;
    double second = 0.0;
    for (const auto &t : impl_->trees) {
        const auto leaf = t.leaf(x);
        mean += leaf[0];
        second += leaf[1] + leaf[0] * leaf[0];
    }
    const auto k = static_cast<double>(impl_->trees.size());
    mean /= k;
    return { mean, std::max(0.0, second / k - mean * mean) };
}

double expected_improvement(double mu, double sigma, double best) noexcept {
    const double gain = mu - best;
    if (!(sigma > 0.0)) {
        return std::max(0.0, gain);
    }
    const double z = gain / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(0.0, gain * cdf + sigma * pdf);
}

const Portfolio &Portfolio::shipped() {
    static const Portfolio portfolio = [] {
        using learners::AlgorithmId;
        struct Recipe {
            data::SyntheticSpec spec;
            AlgorithmId algorithm;
            ParamSet params;
            preprocess::PreprocessConfig preprocess;
        };
        auto spec = [](int classes, std::size_t dim, std::size_t per_batch, double noise, double imbalance) {
            data::SyntheticSpec s;
            s.class_count = classes;
            s.feature_dim = dim;
            s.batch_count = 1;
            s.samples_per_batch = per_batch;
            s.drift_magnitude = { 0.0 };
            s.noise_std = noise;
            if (imbalance > 1.0) {
                for (int c = 0; c < classes; ++c) {
                    s.class_weights.push_back(std::pow(imbalance, static_cast<double>(c) / std::max(1, classes - 1)));
                }
            }
            return s;
        };
        const auto pinned = preprocess::pinned_config();
        auto minmax = pinned;
        minmax.scaling = preprocess::Scaling::minmax;
        auto balanced = pinned;
        balanced.balancing = preprocess::Balancing::inverse_frequency_weights;
        auto pca = pinned;
        pca.feature_step.kind = preprocess::FeatureStepKind::pca;
        pca.feature_step.pca_variance_fraction = 0.99;
        auto median = pinned;
        median.imputation = preprocess::Imputation::median;

        const std::vector<Recipe> recipes{
            { spec(6, 128, 600, 0.5, 3.0), AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 100 } }, { "max_features", std::string{ "sqrt" } } }, pinned },
            { spec(6, 64, 800, 0.8, 2.0), AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 200 } }, { "criterion", std::string{ "entropy" } }, { "bootstrap", false } }, balanced },
            { spec(4, 32, 400, 0.4, 1.0), AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 128 } }, { "min_samples_leaf", std::int64_t{ 2 } }, { "max_features", std::string{ "half" } } }, minmax },
            { spec(3, 16, 300, 0.6, 1.5), AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 64 } }, { "limit_depth", true }, { "max_depth", std::int64_t{ 16 } }, { "max_features", std::string{ "log2" } } }, pinned },
            { spec(6, 128, 1200, 1.0, 4.0), AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 256 } }, { "min_samples_leaf", std::int64_t{ 11 } } }, balanced },
            { spec(5, 96, 500, 0.7, 2.5), AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 100 } }, { "min_samples_leaf", std::int64_t{ 19 } }, { "criterion", std::string{ "entropy" } } }, median },
            { spec(2, 8, 200, 0.5, 1.0), AlgorithmId::gradient_boosting, { { "n_estimators", std::int64_t{ 100 } }, { "learning_rate", 0.1 }, { "max_depth", std::int64_t{ 3 } } }, pinned },
            { spec(6, 128, 900, 0.3, 1.2), AlgorithmId::mlp, { { "hidden_width", std::int64_t{ 128 } }, { "activation", std::string{ "tanh" } }, { "learning_rate", 1e-3 } }, pinned },
            { spec(3, 4, 150, 0.3, 1.0), AlgorithmId::logistic_regression, { { "C", 10.0 }, { "max_iter", std::int64_t{ 500 } } }, pinned },
            { spec(4, 48, 350, 0.5, 1.0), AlgorithmId::svm_rbf, { { "C", 10.0 }, { "gamma", 0.01 } }, pca },
            { spec(2, 2, 100, 0.2, 1.0), AlgorithmId::knn, { { "n_neighbors", std::int64_t{ 5 } }, { "weights", std::string{ "distance" } } }, pinned },
            { spec(6, 128, 700, 0.9, 2.0), AlgorithmId::passive_aggressive, { { "C", 0.1 }, { "max_iter", std::int64_t{ 100 } } }, pinned },
        };
        std::vector<PortfolioEntry> entries;
        for (std::size_t i = 0; i < recipes.size(); ++i) {
            const auto &r = recipes[i];
            const auto ds = data::synthesize_drift(r.spec, mix_seed(0x5eed, i));
            Configuration cfg;
            cfg.algorithm = r.algorithm;
            cfg.params = learners::default_space(r.algorithm).complete(r.params);
            cfg.preprocess = r.preprocess;
            cfg.provenance = Provenance::warmstart;
            const auto idx = ds.all_indices();
            entries.push_back({ data::meta_features(ds, idx), cfg });
        }
        return Portfolio{ std::move(entries) };
    }();
    return portfolio;
}

nlohmann::json Portfolio::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &e : entries_) {
        arr.push_back({ { "fingerprint", e.fingerprint.as_vector() }, { "configuration", e.configuration.to_json() } });
    }
    return arr;
}

Portfolio Portfolio::from_json(const nlohmann::json &j) {
    Portfolio p;
    for (const auto &e : j) {
        const auto fp = e.at("fingerprint").get<std::vector<double>>();
        auto cfg = Configuration::from_json(e.at("configuration"));
        cfg.provenance = Provenance::warmstart;
        p.add({ data::MetaFeatures::from_vector(fp), std::move(cfg) });
    }
    return p;
}

std::vector<Configuration> warmstart(const data::MetaFeatures &meta, const Portfolio &portfolio, std::size_t count) {
    if (portfolio.empty()) {
        throw invalid_argument("warm start needs a non-empty portfolio");
    }
    const auto &entries = portfolio.entries();
    const std::size_t m = data::MetaFeatures::size;
    std::vector<double> mean(m, 0.0);
    std::vector<double> scale(m, 0.0);
    std::vector<std::vector<double>> fps;
    for (const auto &e : entries) {
        fps.push_back(e.fingerprint.as_vector());
    }
    const auto n = static_cast<double>(entries.size());
    for (const auto &f : fps) {
        for (std::size_t k = 0; k < m; ++k) {
            mean[k] += f[k] / n;
        }
    }
    for (const auto &f : fps) {
        for (std::size_t k = 0; k < m; ++k) {
            scale[k] += (f[k] - mean[k]) * (f[k] - mean[k]) / n;
        }
    }
    for (auto &s : scale) {
        s = s > 0.0 ? std::sqrt(s) : 1.0;
    }
    const auto q = meta.as_vector();
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < fps.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double diff = (q[k] - fps[i][k]) / scale[k];
            s += diff * diff;
        }
        dist.emplace_back(std::sqrt(s), i);
    }
    std::stable_sort(dist.begin(), dist.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    std::vector<Configuration> out;
    for (std::size_t i = 0; i < std::min(count, dist.size()); ++i) {
        out.push_back(entries[dist[i].second].configuration);
        out.back().provenance = Provenance::warmstart;
    }
    return out;
}

nlohmann::json TrialResult::to_json() const {
    return {
        { "trial", index },
        { "configuration", configuration.to_json() },
        { "status", to_string(status) },
        { "score", validation_score ? nlohmann::json(*validation_score) : nlohmann::json(nullptr) },
        { "train_time", train_time },
        { "reason", reason },
    };
}

TrialResult evaluate(const Configuration &cfg, const LabeledData &train, const LabeledData &validation, std::span<const int> classes, double per_trial_limit, std::uint64_t seed, const Deadline &outer) {
    TrialResult r;
    r.configuration = cfg;
    const auto start = std::chrono::steady_clock::now();
    const Deadline deadline = Deadline::after(per_trial_limit).earliest(outer);
    try {
        deadline.check();
        auto prep = preprocess::fit_preprocessor(cfg.preprocess, train.X, train.y);
        deadline.check();
        const Matrix Xt = prep.apply(train.X);
        const auto weights = preprocess::sample_weights(cfg.preprocess, train.y);
        learners::TrainOptions options;
        options.classes.assign(classes.begin(), classes.end());
        options.deadline = deadline;
        auto model = learners::train(cfg.algorithm, cfg.params, Xt, train.y, weights, seed, options);
        Matrix proba = model.predict_proba(prep.apply(validation.X));
        r.validation_score = metrics::macro_f1(validation.y, learners::labels_from_proba(proba, model.classes()));
        r.status = TrialStatus::ok;
        r.member = ensemble::Member{ std::move(model), std::move(prep) };
        r.validation_proba = std::move(proba);
    } catch (const trial_timeout &) {
        r.status = TrialStatus::timeout;
        r.reason = "per-trial limit reached";
    } catch (const std::exception &e) {
        r.status = TrialStatus::failed;
        r.reason = e.what();
    }
    r.train_time = clock_seconds(start);
    return r;
}

void SearchBudget::validate() const {
    if (!(wall_clock_limit > 0.0) || !(per_trial_limit > 0.0) || max_trials == 0 || ensemble_pool_size == 0) {
        throw config_error("budget fields must all be positive");
    }
    if (per_trial_limit > wall_clock_limit) {
        throw config_error("per_trial_limit exceeds wall_clock_limit");
    }
}

nlohmann::json SearchBudget::to_json() const {
    return { { "wall_clock_limit", wall_clock_limit }, { "per_trial_limit", per_trial_limit }, { "max_trials", max_trials }, { "ensemble_pool_size", ensemble_pool_size } };
}

SearchBudget SearchBudget::from_json(const nlohmann::json &j) {
    SearchBudget b;
    b.wall_clock_limit = j.value("wall_clock_limit", b.wall_clock_limit);
    b.per_trial_limit = j.value("per_trial_limit", b.per_trial_limit);
    b.max_trials = j.value("max_trials", b.max_trials);
    b.ensemble_pool_size = j.value("ensemble_pool_size", b.ensemble_pool_size);
    return b;
}

nlohmann::json SearchOptions::to_json() const {
    std::vector<std::string> names;
    for (const auto a : algorithms) {
        names.emplace_back(learners::to_string(a));
    }
    return {
        { "meta", meta },
        { "search_preprocessing", search_preprocessing },
        { "ensembling", ensembling },
        { "holdout_fraction", holdout_fraction },
        { "strategy", strategy == Strategy::bayesian ? "bayesian" : "random" },
        { "algorithms", names },
        { "warmstart_count", warmstart_count },
        { "surrogate_min_points", surrogate_min_points },
        { "candidates", candidates },
        { "random_every", random_every },
        { "workers", workers },
        { "max_rounds", selection.max_rounds },
        { "patience", selection.patience },
    };
}

SearchOptions SearchOptions::from_json(const nlohmann::json &j) {
    SearchOptions o;
    o.meta = j.value("meta", o.meta);
    o.search_preprocessing = j.value("search_preprocessing", o.search_preprocessing);
    o.ensembling = j.value("ensembling", o.ensembling);
    o.holdout_fraction = j.value("holdout_fraction", o.holdout_fraction);
    const auto strategy = j.value("strategy", std::string{ "bayesian" });
    if (strategy != "bayesian" && strategy != "random") {
        throw config_error("strategy must be 'bayesian' or 'random'");
    }
    o.strategy = strategy == "bayesian" ? Strategy::bayesian : Strategy::random;
    if (j.contains("algorithms")) {
        o.algorithms.clear();
        for (const auto &name : j.at("algorithms")) {
            o.algorithms.push_back(learners::algorithm_from_string(name.get<std::string>()));
        }
    }
    o.warmstart_count = j.value("warmstart_count", o.warmstart_count);
    o.surrogate_min_points = j.value("surrogate_min_points", o.surrogate_min_points);
    o.candidates = j.value("candidates", o.candidates);
    o.random_every = j.value("random_every", o.random_every);
    o.workers = j.value("workers", o.workers);
    o.selection.max_rounds = j.value("max_rounds", o.selection.max_rounds);
    o.selection.patience = j.value("patience", o.selection.patience);
    return o;
}

std::string SearchTrace::to_jsonl() const {
    std::string out;
    for (const auto &t : trials) {
        out += t.to_json().dump();
        out += '\n';
    }
    return out;
}

std::vector<Configuration> SearchTrace::configurations() const {
    std::vector<Configuration> out;
    for (const auto &t : trials) {
        out.push_back(t.configuration);
    }
    return out;
}

double SearchTrace::time_per_trial() const {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto &t : trials) {
        if (t.status == TrialStatus::ok) {
            total += t.train_time;
            ++n;
        }
    }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
}

std::vector<std::size_t> stratified_holdout(std::span<const int> y, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw invalid_argument("hold-out fraction must lie in (0, 1)");
    }
    const auto classes = unique_labels(y);
    rng_type rng{ seed };
    std::vector<std::size_t> out;
    for (const int c : classes) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == c) {
                rows.push_back(i);
            }
        }
        shuffle(rows, rng);
        auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
        if (rows.size() >= 2) {
            take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
        } else {
            take = 0;
        }
        out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

Configuration suggest(std::span<const TrialResult> history, const SearchSpace &space, const SearchOptions &options, rng_type &rng) {
    if (history.size() < std::max<std::size_t>(1, options.surrogate_min_points)) {
        return space.sample(rng);
    }
    Matrix rows(history.size(), space.encoded_width());
    std::vector<double> scores(history.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto enc = space.encode(history[i].configuration);
        std::copy(enc.begin(), enc.end(), rows.row(i).begin());
        scores[i] = history[i].validation_score.value_or(0.0);
        best = std::max(best, scores[i]);
    }
    ForestSurrogate surrogate;
    surrogate.fit(rows, scores, rng());

    Configuration chosen;
    double chosen_ei = -1.0;
    for (std::size_t k = 0; k < std::max<std::size_t>(1, options.candidates); ++k) {
        Configuration c = space.sample(rng);
        const auto [mu, var] = surrogate.predict(space.encode(c));
        const double ei = expected_improvement(mu, std::sqrt(var), best);
        if (ei > chosen_ei) {
            chosen_ei = ei;
            chosen = std::move(c);
        }
    }
    chosen.provenance = Provenance::surrogate;
    return chosen;
}

SearchResult run_search(const LabeledData &train, std::span<const std::size_t> ids, const SearchBudget &budget, const SearchOptions &options, std::uint64_t seed) {
    budget.validate();
    if (!(options.holdout_fraction > 0.0 && options.holdout_fraction <= 0.5)) {
        throw config_error("holdout_fraction must lie in (0, 0.5]");
    }
    const std::size_t n = train.X.rows();
    if (train.y.size() != n) {
        throw invalid_argument("training labels do not match rows");
    }
    if (!ids.empty() && ids.size() != n) {
        throw invalid_argument("row ids do not match rows");
    }
    const auto classes = unique_labels(train.y);
    if (classes.size() < 2) {
        throw invalid_argument("the search needs at least two classes in the training data");
    }

    SearchResult result;
    result.trace.options = options;
    result.trace.seed = seed;

    const auto holdout_pos = stratified_holdout(train.y, options.holdout_fraction, mix_seed(seed, 1));
    std::vector<std::size_t> fit_pos;
    {
        std::size_t h = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (h < holdout_pos.size() && holdout_pos[h] == i) {
                ++h;
            } else {
                fit_pos.push_back(i);
            }
        }
    }
    auto id_of = [&](std::size_t pos) { return ids.empty() ? pos : ids[pos]; };
    for (const auto p : fit_pos) {
        result.fit_ids.push_back(id_of(p));
    }
    for (const auto p : holdout_pos) {
        result.holdout_ids.push_back(id_of(p));
    }
    auto subset = [&](const std::vector<std::size_t> &pos) {
        LabeledData d{ train.X.select_rows(pos), {} };
        for (const auto p : pos) {
            d.y.push_back(train.y[p]);
        }
        return d;
    };
    const LabeledData fit = subset(fit_pos);
    const LabeledData hold = subset(holdout_pos);

    const SearchSpace space{ options.algorithms, options.search_preprocessing, train.X.cols() };

    std::vector<Configuration> warm;
    if (options.meta && options.warmstart_count > 0) {
        const Portfolio &portfolio = options.portfolio != nullptr ? *options.portfolio : Portfolio::shipped();
        for (auto cfg : warmstart(data::meta_features(fit.X, fit.y), portfolio, portfolio.entries().size())) {
            if (!options.search_preprocessing) {
                cfg.preprocess = preprocess::pinned_config();
            }
            const bool duplicate = std::any_of(warm.begin(), warm.end(), [&](const Configuration &w) { return w.same_point(cfg); });
            if (!duplicate && space.contains(cfg)) {
                warm.push_back(std::move(cfg));
            }
            if (warm.size() == options.warmstart_count) {
                break;
            }
        }
    }

    rng_type sampler{ mix_seed(seed, 2) };
    const Deadline wall = Deadline::after(budget.wall_clock_limit);
    std::size_t scheduled = 0;
    auto next_config = [&]() {
        if (scheduled < warm.size()) {
            return warm[scheduled];
        }
        const std::size_t j = scheduled - warm.size();
        const bool random_turn = options.strategy == Strategy::random || options.random_every <= 1 || j % options.random_every == 0;
        return random_turn ? space.sample(sampler) : suggest(result.trace.trials, space, options, sampler);
    };

    struct PoolEntry {
        double score;
        std::size_t order;
        std::size_t trial;
        ensemble::Member member;
        Matrix proba;
    };
    std::vector<PoolEntry> pool;
    double best = -1.0;
    auto record = [&](TrialResult r) {
        const std::size_t order = result.trace.trials.size();
        if (r.status == TrialStatus::ok) {
            const double s = *r.validation_score;
            if (s > best) {
                best = s;
                result.trace.incumbent.push_back({ r.index, s });
            }
            pool.push_back({ s, order, r.index, std::move(*r.member), std::move(r.validation_proba) });
            std::stable_sort(pool.begin(), pool.end(), [](const PoolEntry &a, const PoolEntry &b) { return a.score != b.score ? a.score > b.score : a.order < b.order; });
            if (pool.size() > budget.ensemble_pool_size) {
                pool.pop_back();
            }
        }
        r.member.reset();
        r.validation_proba = Matrix{};
        result.trace.trials.push_back(std::move(r));
    };

    const std::size_t workers = std::max<std::size_t>(1, options.workers);
    std::vector<std::future<TrialResult>> inflight;
    for (;;) {
        while (inflight.size() < workers && scheduled < budget.max_trials && !wall.expired()) {
            Configuration cfg = next_config();
            const std::size_t index = scheduled++;
            const std::uint64_t trial_seed = mix_seed(seed, 1000 + index);
            inflight.push_back(std::async(std::launch::async, [&fit, &hold, &classes, &budget, &wall, cfg = std::move(cfg), index, trial_seed]() {
                TrialResult r = evaluate(cfg, fit, hold, classes, budget.per_trial_limit, trial_seed, wall);
                r.index = index;
                return r;
            }));
        }
        if (inflight.empty()) {
            break;
        }
        // collect the first finished trial; with one worker this is simply the only one
        std::size_t done = inflight.size();
        while (done == inflight.size()) {
            for (std::size_t k = 0; k < inflight.size(); ++k) {
                if (inflight[k].wait_for(std::chrono::milliseconds(workers == 1 ? 50 : 2)) == std::future_status::ready) {
                    done = k;
                    break;
                }
            }
        }
        TrialResult r = inflight[done].get();
        inflight.erase(inflight.begin() + static_cast<std::ptrdiff_t>(done));
        record(std::move(r));
    }

    if (pool.empty()) {
        throw error("no viable configuration");
    }
    result.incumbent = pool.front().member;
    result.incumbent_trial = pool.front().trial;
    if (options.ensembling) {
        std::vector<ensemble::Member> members;
        std::vector<Matrix> probas;
        for (auto &p : pool) {
            members.push_back(p.member);
            probas.push_back(std::move(p.proba));
        }
        result.model = ensemble::ensemble_select(members, probas, hold.y, options.selection, &result.selection);
    } else {
        result.model = ensemble::EnsembleModel{ { result.incumbent }, { 1.0 } };
        result.selection.picks = { 0 };
        result.selection.round_scores = { pool.front().score };
        result.selection.kept_rounds = 1;
        result.selection.counts = { 1 };
        result.selection.score = pool.front().score;
    }
    return result;
}

}  // namespace driftml::search
