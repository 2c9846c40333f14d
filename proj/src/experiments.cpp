#include "driftml/experiments.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace driftml::experiments {

namespace {

using learners::AlgorithmId;
using search::LabeledData;
namespace fs = std::filesystem;

class Stopwatch {
  public:
    [[nodiscard]] double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

  private:
    std::chrono::steady_clock::time_point start_{ std::chrono::steady_clock::now() };
};

std::mutex log_mutex;

void log_line(std::ostream &log, const std::string &line) {
    const std::lock_guard lock{ log_mutex };
    log << line << '\n';
    log.flush();
}

LabeledData take(const data::DriftDataset &ds, std::span<const std::size_t> idx) {
    return { ds.features(idx), ds.labels(idx) };
}

nlohmann::json report_metrics(const metrics::EvalReport &r) {
    nlohmann::json m{
        { "precision", r.macro.precision },
        { "recall", r.macro.recall },
        { "macro_f1", r.macro.f1 },
        { "weighted_f1", r.weighted.f1 },
        { "accuracy", r.accuracy },
    };
    if (r.roc) {
        m["macro_auc"] = r.roc->macro_auc;
    }
    return m;
}

std::string roc_csv(const metrics::RocReport &roc) {
    std::string out = "class,fpr,tpr,threshold\n";
    for (const auto &c : roc.per_class) {
        if (!c.present) {
            continue;
        }
        for (std::size_t k = 0; k < c.fpr.size(); ++k) {
            const std::string threshold = k == 0 ? std::string{ "inf" } : fmt::format("{}", c.thresholds[k - 1]);
            out += fmt::format("{},{},{},{}\n", c.label, c.fpr[k], c.tpr[k], threshold);
        }
    }
    return out;
}

std::string dump(const nlohmann::json &j) {
    return j.dump(2) + "\n";
}

double random_forest_weight(const ensemble::EnsembleModel &model) {
    double w = 0.0;
    for (std::size_t m = 0; m < model.members().size(); ++m) {
        if (model.members()[m].model.algorithm() == AlgorithmId::random_forest) {
            w += model.weights()[m];
        }
    }
    return w;
}

struct AutomlOutcome {
    metrics::EvalReport report;
    search::SearchResult search;
};

AutomlOutcome automl_on(const data::DriftDataset &ds, const data::SplitPlan &plan, const search::SearchBudget &budget, const search::SearchOptions &options, std::uint64_t seed) {
    const LabeledData train = take(ds, plan.train_indices);
    const LabeledData test = take(ds, plan.test_indices);
    AutomlOutcome out{ {}, search::run_search(train, plan.train_indices, budget, options, seed) };
    assert_hygiene(out.search, plan.test_indices);
    const auto classes = ds.classes();
    out.report = score_predictions(test.y, out.search.model.predict_proba(test.X), out.search.model.classes(), classes);
    return out;
}

struct Tuned {
    ParamSet params;
    std::optional<double> holdout_f1;
};

/// Random search over one algorithm's space on a hold-out carved from `train`.
Tuned tune(const ModelSpec &spec, const LabeledData &train, std::span<const std::size_t> train_ids, std::span<const std::size_t> test_ids, const RunConfig &cfg, std::uint64_t seed) {
    if (cfg.tuning_trials == 0) {
        return { learners::default_space(spec.algorithm).complete(spec.params), std::nullopt };
    }
    search::SearchOptions o;
    o.meta = false;
    o.search_preprocessing = false;
    o.ensembling = false;
    o.strategy = search::Strategy::random;
    o.algorithms = { spec.algorithm };
    o.holdout_fraction = cfg.automl.holdout_fraction;
    search::SearchBudget b = cfg.budget;
    b.max_trials = cfg.tuning_trials;
    const auto result = search::run_search(train, train_ids, b, o, seed);
    assert_hygiene(result, test_ids);
    return { result.incumbent.model.params(), result.selection.score };
}

Matrix pooled_cv_proba(const ModelSpec &spec, const data::DriftDataset &ds, std::size_t folds, std::uint64_t seed, std::vector<int> &y_out, std::vector<int> &classes_out) {
    const auto plans = data::kfold_split(ds, folds, mix_seed(seed, 3));
    const auto all = ds.all_indices();
    classes_out = unique_labels(ds.labels(all));
    y_out = ds.labels(all);
    Matrix pooled(ds.size(), classes_out.size(), 0.0);
    for (std::size_t f = 0; f < plans.size(); ++f) {
        const auto &plan = plans[f];
        const LabeledData train = take(ds, plan.train_indices);
        const auto member = fit_pipeline(spec, train, classes_out, mix_seed(seed, 300 + f));
        const Matrix p = member.predict_proba(ds.features(plan.test_indices));
        for (std::size_t r = 0; r < plan.test_indices.size(); ++r) {
            std::copy(p.row(r).begin(), p.row(r).end(), pooled.row(plan.test_indices[r]).begin());
        }
    }
    return pooled;
}

nlohmann::json make_row(const std::string &name, nlohmann::json metrics) {
    return { { "name", name }, { "metrics", std::move(metrics) } };
}

data::SplitPlan paradigm_split(const RunConfig &cfg, const data::DriftDataset &ds) {
    if (cfg.k_train < 1 || cfg.k_train >= ds.batch_count()) {
        throw config_error(fmt::format("k_train {} needs 1 <= k_train < {} batches", cfg.k_train, ds.batch_count()));
    }
    return data::chronological_split(ds, cfg.k_train);
}

nlohmann::json split_json(const data::SplitPlan &plan) {
    return { { "kind", data::to_string(plan.kind) }, { "k_train", plan.k_train }, { "train_size", plan.train_indices.size() }, { "test_size", plan.test_indices.size() } };
}

SeedOutput run_benchmark(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto plan = paradigm_split(cfg, ds);
    const LabeledData train = take(ds, plan.train_indices);
    const LabeledData test = take(ds, plan.test_indices);
    const auto classes = ds.classes();
    const auto train_classes = unique_labels(train.y);
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
        const auto &spec = cfg.models[i];
        const Stopwatch clock;
        const Tuned tuned = tune(spec, train, plan.train_indices, plan.test_indices, cfg, mix_seed(seed, 100 + i));
        ModelSpec fitted = spec;
        fitted.params = tuned.params;
        const auto member = fit_pipeline(fitted, train, train_classes, mix_seed(seed, 200 + i));
        const auto report = score_predictions(test.y, member.predict_proba(test.X), member.model.classes(), classes);
        auto m = report_metrics(report);
        if (tuned.holdout_f1) {
            m["holdout_f1"] = *tuned.holdout_f1;
        }
        rows.push_back(make_row(spec.label(), m));
        params[spec.label()] = tuned.params.to_json();
        out.files.emplace_back("report_" + spec.label() + ".json", dump(report.to_json()));
        out.files.emplace_back("roc_" + spec.label() + ".csv", roc_csv(*report.roc));
        out.timings[spec.label()] = clock.seconds();
        log_line(log, fmt::format("[seed {}] {}: macro F1 {:.4f}", seed, spec.label(), report.macro.f1));
    }
    if (cfg.include_automl) {
        const Stopwatch clock;
        const auto a = automl_on(ds, plan, cfg.budget, cfg.automl, seed);
        auto m = report_metrics(a.report);
        m["holdout_f1"] = a.search.selection.score;
        m["ensemble_size"] = a.search.model.members().size();
        rows.push_back(make_row("automl_dc", m));
        out.files.emplace_back("report_automl_dc.json", dump(a.report.to_json()));
        out.files.emplace_back("roc_automl_dc.csv", roc_csv(*a.report.roc));
        out.files.emplace_back("composition_automl_dc.json", dump(a.search.model.composition()));
        out.timings["automl_dc"] = clock.seconds();
        log_line(log, fmt::format("[seed {}] automl_dc: macro F1 {:.4f}", seed, a.report.macro.f1));
    }
    out.results = { { "split", split_json(plan) }, { "rows", rows }, { "tuned_params", params } };
    return out;
}

SeedOutput run_cv_compare(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto plan = paradigm_split(cfg, ds);
    const LabeledData train = take(ds, plan.train_indices);
    const LabeledData test = take(ds, plan.test_indices);
    const auto classes = ds.classes();
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
        const Stopwatch clock;
        ModelSpec spec = cfg.models[i];
        spec.params = tune(spec, train, plan.train_indices, plan.test_indices, cfg, mix_seed(seed, 100 + i)).params;
        const auto member = fit_pipeline(spec, train, unique_labels(train.y), mix_seed(seed, 200 + i));
        const auto paradigm = score_predictions(test.y, member.predict_proba(test.X), member.model.classes(), classes);

        std::vector<int> y_all;
        std::vector<int> cv_classes;
        const Matrix pooled = pooled_cv_proba(spec, ds, cfg.folds, seed, y_all, cv_classes);
        const auto cv = score_predictions(y_all, pooled, cv_classes, classes);
        rows.push_back(make_row(spec.label(), {
                                                  { "cv_precision", cv.macro.precision },
                                                  { "cv_recall", cv.macro.recall },
                                                  { "cv_f1", cv.macro.f1 },
                                                  { "cv_accuracy", cv.accuracy },
                                                  { "paradigm_precision", paradigm.macro.precision },
                                                  { "paradigm_recall", paradigm.macro.recall },
                                                  { "paradigm_f1", paradigm.macro.f1 },
                                                  { "paradigm_accuracy", paradigm.accuracy },
                                                  { "drift_gap", cv.macro.f1 - paradigm.macro.f1 },
                                              }));
        out.timings[spec.label()] = clock.seconds();
        log_line(log, fmt::format("[seed {}] {}: cv F1 {:.4f}, paradigm F1 {:.4f}", seed, spec.label(), cv.macro.f1, paradigm.macro.f1));
    }
    out.results = { { "split", split_json(plan) }, { "folds", cfg.folds }, { "rows", rows } };
    return out;
}

SeedOutput run_online(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto schedule = data::incremental_schedule(ds);
    const auto classes = ds.classes();
    std::map<std::string, std::vector<double>> accuracy;
    std::map<std::string, std::vector<double>> f1;
    std::vector<std::string> order;
    for (const auto &spec : cfg.models) {
        order.push_back(spec.label());
    }
    if (cfg.include_automl) {
        order.emplace_back("automl_dc");
    }
    std::string csv = "step,test_batch,model,accuracy,macro_f1\n";
    double automl_time = 0.0;
    for (const auto &plan : schedule) {
        const LabeledData train = take(ds, plan.train_indices);
        const LabeledData test = take(ds, plan.test_indices);
        for (std::size_t i = 0; i < cfg.models.size(); ++i) {
            const auto &spec = cfg.models[i];
            const auto member = fit_pipeline(spec, train, unique_labels(train.y), mix_seed(seed, 1000 * plan.step + i));
            const auto r = score_predictions(test.y, member.predict_proba(test.X), member.model.classes(), classes);
            accuracy[spec.label()].push_back(r.accuracy);
            f1[spec.label()].push_back(r.macro.f1);
        }
        if (cfg.include_automl) {
            const Stopwatch clock;
            if (unique_labels(train.y).size() < 2) {
                throw config_error(fmt::format("online step {} trains on a single class; AutoML needs two", plan.step));
            }
            const auto a = automl_on(ds, plan, cfg.step_budget, cfg.automl, mix_seed(seed, plan.step));
            accuracy["automl_dc"].push_back(a.report.accuracy);
            f1["automl_dc"].push_back(a.report.macro.f1);
            automl_time += clock.seconds();
        }
        for (const auto &name : order) {
            csv += fmt::format("{},{},{},{},{}\n", plan.step, plan.step + 1, name, accuracy[name].back(), f1[name].back());
        }
        log_line(log, fmt::format("[seed {}] step {} done", seed, plan.step));
    }
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json curves = nlohmann::json::object();
    for (const auto &name : order) {
        const auto &acc = accuracy[name];
        nlohmann::json m{
            { "mean_accuracy", std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size()) },
            { "mean_macro_f1", std::accumulate(f1[name].begin(), f1[name].end(), 0.0) / static_cast<double>(acc.size()) },
            { "steps", acc.size() },
        };
        if (name == "automl_dc" && accuracy.contains("random_forest")) {
            const auto &rf = accuracy["random_forest"];
            std::size_t wins = 0;
            for (std::size_t k = 0; k < acc.size(); ++k) {
                wins += acc[k] > rf[k] ? 1 : 0;
            }
            m["dominance_vs_random_forest"] = static_cast<double>(wins) / static_cast<double>(acc.size());
        }
        rows.push_back(make_row(name, m));
        curves[name] = { { "accuracy", acc }, { "macro_f1", f1[name] } };
    }
    out.files.emplace_back("curves.csv", csv);
    out.timings["automl_dc"] = automl_time;
    out.results = { { "steps", schedule.size() }, { "rows", rows }, { "curves", curves } };
    return out;
}

SeedOutput run_ablation(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto plan = paradigm_split(cfg, ds);
    struct Variant {
        std::string name;
        search::SearchOptions options;
    };
    std::vector<Variant> variants{ { "all", cfg.automl }, { "no_ensemble", cfg.automl }, { "no_preprocessing", cfg.automl }, { "no_meta", cfg.automl } };
    variants[1].options.ensembling = false;
    variants[2].options.search_preprocessing = false;
    variants[3].options.meta = false;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &v : variants) {
        const Stopwatch clock;
        const auto a = automl_on(ds, plan, cfg.budget, v.options, seed);
        auto m = report_metrics(a.report);
        m["ensemble_size"] = a.search.model.members().size();
        m["random_forest_weight"] = random_forest_weight(a.search.model);
        m["trials"] = a.search.trace.trials.size();
        rows.push_back(make_row(v.name, m));
        out.files.emplace_back("ablation_" + v.name + ".json", dump({ { "report", a.report.to_json() }, { "composition", a.search.model.composition() }, { "incumbent_trial", a.search.incumbent_trial } }));
        out.files.emplace_back("confusion_" + v.name + ".csv", a.report.to_csv());
        out.timings[v.name] = { { "wall", clock.seconds() }, { "time_per_trial", a.search.trace.time_per_trial() }, { "trials", a.search.trace.trials.size() } };
        log_line(log, fmt::format("[seed {}] {}: accuracy {:.4f}", seed, v.name, a.report.accuracy));
    }
    out.results = { { "split", split_json(plan) }, { "rows", rows } };
    return out;
}

SeedOutput run_linearity(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto classes = ds.classes();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto id : { AlgorithmId::svm_linear, AlgorithmId::svm_rbf }) {
        ModelSpec spec;
        spec.algorithm = id;
        for (const auto &m : cfg.models) {
            if (m.algorithm == id) {
                spec = m;
            }
        }
        const Stopwatch clock;
        std::vector<int> y_all;
        std::vector<int> cv_classes;
        const Matrix pooled = pooled_cv_proba(spec, ds, cfg.folds, seed, y_all, cv_classes);
        const auto cv = score_predictions(y_all, pooled, cv_classes, classes);
        rows.push_back(make_row(spec.label(), { { "cv_accuracy", cv.accuracy }, { "cv_f1", cv.macro.f1 } }));
        out.timings[spec.label()] = clock.seconds();
        log_line(log, fmt::format("[seed {}] {}: cv accuracy {:.4f}", seed, spec.label(), cv.accuracy));
    }
    out.results = { { "folds", cfg.folds }, { "rows", rows } };
    return out;
}

SeedOutput run_automl(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto plan = cfg.train_fraction > 0.0 ? data::chronological_fraction_split(ds, cfg.train_fraction) : paradigm_split(cfg, ds);
    const Stopwatch clock;
    const auto a = automl_on(ds, plan, cfg.budget, cfg.automl, seed);
    auto m = report_metrics(a.report);
    double min_f1 = 1.0;
    for (const auto &c : a.report.per_class) {
        if (c.support > 0) {
            min_f1 = std::min(min_f1, c.f1);
        }
    }
    m["min_class_f1"] = min_f1;
    m["holdout_f1"] = a.search.selection.score;
    m["ensemble_size"] = a.search.model.members().size();
    m["random_forest_weight"] = random_forest_weight(a.search.model);
    nlohmann::json incumbent = nlohmann::json::array();
    for (const auto &p : a.search.trace.incumbent) {
        incumbent.push_back({ { "trial", p.trial }, { "score", p.score } });
    }
    out.files.emplace_back("model.json", a.search.model.to_json().dump() + "\n");
    out.files.emplace_back("composition.json", dump(a.search.model.composition()));
    out.files.emplace_back("report.json", dump(a.report.to_json()));
    out.files.emplace_back("report.csv", a.report.to_csv());
    out.files.emplace_back("roc.csv", roc_csv(*a.report.roc));
    out.files.emplace_back("trace.jsonl", a.search.trace.to_jsonl());
    out.timings["automl_dc"] = { { "wall", clock.seconds() }, { "time_per_trial", a.search.trace.time_per_trial() } };
    log_line(log, fmt::format("[seed {}] automl_dc: macro F1 {:.4f}, {} members", seed, a.report.macro.f1, a.search.model.members().size()));
    out.results = { { "split", split_json(plan) }, { "rows", nlohmann::json::array({ make_row("automl_dc", m) }) }, { "incumbent", incumbent }, { "composition", a.search.model.composition() } };
    return out;
}

SeedOutput run_grid(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    SeedOutput out{ seed, {}, nlohmann::json::object(), {} };
    const auto plan = paradigm_split(cfg, ds);
    const LabeledData train = take(ds, plan.train_indices);
    const LabeledData test = take(ds, plan.test_indices);
    const std::size_t d = ds.feature_dim();
    const auto &g = cfg.grid;
    if (g.feature_x >= d || g.feature_y >= d || g.feature_x == g.feature_y) {
        throw config_error(fmt::format("grid features ({}, {}) must be distinct and below {}", g.feature_x, g.feature_y, d));
    }
    std::vector<double> base(d, 0.0);
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < train.X.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double v = train.X(r, c);
            base[c] += v / static_cast<double>(train.X.rows());
            lo[c] = std::min(lo[c], v);
            hi[c] = std::max(hi[c], v);
        }
    }
    metrics::GridBounds bounds;
    if (g.bounds) {
        bounds = *g.bounds;
    } else {
        const double px = 0.05 * std::max(hi[g.feature_x] - lo[g.feature_x], 1e-9);
        const double py = 0.05 * std::max(hi[g.feature_y] - lo[g.feature_y], 1e-9);
        bounds = { lo[g.feature_x] - px, hi[g.feature_x] + px, lo[g.feature_y] - py, hi[g.feature_y] + py };
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
        const auto &spec = cfg.models[i];
        const auto member = fit_pipeline(spec, train, unique_labels(train.y), mix_seed(seed, 200 + i));
        const auto grid = metrics::decision_grid([&](const Matrix &X) { return learners::labels_from_proba(member.predict_proba(X), member.model.classes()); }, base, g.feature_x, g.feature_y, bounds, g.resolution);
        const double acc = metrics::evaluate(test.y, learners::labels_from_proba(member.predict_proba(test.X), member.model.classes())).accuracy;
        std::set<int> distinct(grid.labels.begin(), grid.labels.end());
        rows.push_back(make_row(spec.label(), { { "test_accuracy", acc }, { "grid_classes", distinct.size() } }));
        out.files.emplace_back("grid_" + spec.label() + ".csv", grid.to_csv());
        log_line(log, fmt::format("[seed {}] {}: grid with {} classes", seed, spec.label(), distinct.size()));
    }
    out.results = { { "split", split_json(plan) },
                    { "bounds", { bounds.x_low, bounds.x_high, bounds.y_low, bounds.y_high } },
                    { "features", { g.feature_x, g.feature_y } },
                    { "rows", rows } };
    return out;
}

void write_file(const fs::path &path, const std::string &contents) {
    fs::create_directories(path.parent_path());
    std::ofstream f{ path, std::ios::binary };
    if (!f) {
        throw error("cannot write " + path.string());
    }
    f << contents;
}

nlohmann::json model_spec_to_json(const ModelSpec &m) {
    nlohmann::json j{ { "algorithm", learners::to_string(m.algorithm) }, { "params", m.params.to_json() }, { "preprocess", m.preprocess.to_json() } };
    if (!m.name.empty()) {
        j["name"] = m.name;
    }
    return j;
}

ModelSpec model_spec_from_json(const nlohmann::json &j) {
    ModelSpec m;
    if (j.is_string()) {
        m.algorithm = learners::algorithm_from_string(j.get<std::string>());
        return m;
    }
    m.algorithm = learners::algorithm_from_string(j.at("algorithm").get<std::string>());
    m.params = ParamSet::from_json(j.value("params", nlohmann::json::object()));
    if (j.contains("preprocess")) {
        m.preprocess = preprocess::PreprocessConfig::from_json(j.at("preprocess"));
    }
    m.name = j.value("name", std::string{});
    return m;
}

}  // namespace

std::string_view to_string(Experiment e) noexcept {
    switch (e) {
        case Experiment::benchmark: return "benchmark";
        case Experiment::cv_compare: return "cv_compare";
        case Experiment::online: return "online";
        case Experiment::ablation: return "ablation";
        case Experiment::linearity: return "linearity";
        case Experiment::automl: return "automl";
        case Experiment::grid: return "grid";
    }
    return "benchmark";
}

Experiment experiment_from_string(std::string_view s) {
    std::string key{ s };
    std::replace(key.begin(), key.end(), '-', '_');
    for (const auto e : { Experiment::benchmark, Experiment::cv_compare, Experiment::online, Experiment::ablation, Experiment::linearity, Experiment::automl, Experiment::grid }) {
        if (to_string(e) == key) {
            return e;
        }
    }
    throw config_error("unknown experiment '" + std::string{ s } + "'");
}

data::DriftDataset DatasetSource::load() const {
    const int sources = (files.empty() ? 0 : 1) + (data_dir.empty() ? 0 : 1) + (synthetic ? 1 : 0);
    if (sources != 1) {
        throw config_error("dataset needs exactly one of files, data_dir or synthetic");
    }
    if (synthetic) {
        return data::synthesize_drift(*synthetic, synthetic_seed);
    }
    if (!data_dir.empty()) {
        const auto paths = data::standard_batch_paths(data_dir);
        return data::load_batches(paths);
    }
    return data::load_batches(files);
}

nlohmann::json synthetic_spec_to_json(const data::SyntheticSpec &s) {
    return {
        { "class_count", s.class_count },
        { "feature_dim", s.feature_dim },
        { "batch_count", s.batch_count },
        { "samples_per_batch", s.samples_per_batch },
        { "drift_magnitude", s.drift_magnitude },
        { "noise_std", s.noise_std },
        { "sensitivity", s.sensitivity },
        { "center_scale", s.center_scale },
        { "class_weights", s.class_weights },
        { "layout", s.layout == data::SyntheticLayout::rings ? "rings" : "blobs" },
    };
}

data::SyntheticSpec synthetic_spec_from_json(const nlohmann::json &j) {
    data::SyntheticSpec s;
    s.class_count = j.value("class_count", s.class_count);
    s.feature_dim = j.value("feature_dim", s.feature_dim);
    s.batch_count = j.value("batch_count", s.batch_count);
    s.samples_per_batch = j.value("samples_per_batch", s.samples_per_batch);
    s.drift_magnitude = j.value("drift_magnitude", std::vector<double>(s.batch_count, 0.0));
    s.noise_std = j.value("noise_std", s.noise_std);
    s.sensitivity = j.value("sensitivity", s.sensitivity);
    s.center_scale = j.value("center_scale", s.center_scale);
    s.class_weights = j.value("class_weights", s.class_weights);
    const auto layout = j.value("layout", std::string{ "blobs" });
    if (layout != "blobs" && layout != "rings") {
        throw config_error("synthetic layout must be 'blobs' or 'rings'");
    }
    s.layout = layout == "rings" ? data::SyntheticLayout::rings : data::SyntheticLayout::blobs;
    return s;
}

void RunConfig::validate() const {
    if (seeds.empty()) {
        throw config_error("seeds must not be empty");
    }
    if (dataset.synthetic && (!dataset.files.empty() || !dataset.data_dir.empty())) {
        throw config_error("dataset: use either synthetic or files/data_dir, not both");
    }
    const bool needs_models = experiment == Experiment::benchmark || experiment == Experiment::cv_compare || experiment == Experiment::grid;
    if (needs_models && models.empty()) {
        throw config_error(fmt::format("{} needs at least one model", to_string(experiment)));
    }
    if (experiment == Experiment::online && models.empty() && !include_automl) {
        throw config_error("online needs at least one model or include_automl");
    }
    if ((experiment == Experiment::cv_compare || experiment == Experiment::linearity) && folds < 2) {
        throw config_error("folds must be at least 2");
    }
    if (train_fraction < 0.0 || train_fraction >= 1.0) {
        throw config_error("train_fraction must lie in [0, 1)");
    }
    if (grid.resolution < 2) {
        throw config_error("grid resolution must be at least 2");
    }
    if (workers == 0) {
        throw config_error("workers must be at least 1");
    }
    budget.validate();
    step_budget.validate();
    std::set<std::string> labels;
    for (const auto &m : models) {
        if (!labels.insert(m.label()).second) {
            throw config_error("duplicate model label '" + m.label() + "'; set a distinct name");
        }
        if (auto why = learners::default_space(m.algorithm).violation(learners::default_space(m.algorithm).complete(m.params)); !why.empty()) {
            throw config_error(m.label() + ": " + why);
        }
    }
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json ds = nlohmann::json::object();
    if (!dataset.files.empty()) {
        std::vector<std::string> f;
        for (const auto &p : dataset.files) {
            f.push_back(p.string());
        }
        ds["files"] = f;
    }
    if (!dataset.data_dir.empty()) {
        ds["data_dir"] = dataset.data_dir.string();
    }
    if (dataset.synthetic) {
        ds["synthetic"] = synthetic_spec_to_json(*dataset.synthetic);
        ds["seed"] = dataset.synthetic_seed;
    }
    nlohmann::json models_json = nlohmann::json::array();
    for (const auto &m : models) {
        models_json.push_back(model_spec_to_json(m));
    }
    nlohmann::json grid_json{ { "feature_x", grid.feature_x }, { "feature_y", grid.feature_y }, { "resolution", grid.resolution } };
    if (grid.bounds) {
        grid_json["bounds"] = { grid.bounds->x_low, grid.bounds->x_high, grid.bounds->y_low, grid.bounds->y_high };
    }
    return {
        { "experiment", to_string(experiment) },
        { "dataset", ds },
        { "models", models_json },
        { "include_automl", include_automl },
        { "split", { { "k_train", k_train }, { "train_fraction", train_fraction }, { "folds", folds } } },
        { "tuning", { { "trials", tuning_trials } } },
        { "budget", budget.to_json() },
        { "automl", automl.to_json() },
        { "online", { { "step_budget", step_budget.to_json() } } },
        { "grid", grid_json },
        { "seeds", seeds },
        { "output_dir", output_dir.string() },
        { "workers", workers },
    };
}

RunConfig RunConfig::from_json(const nlohmann::json &j) {
    static const std::set<std::string> known{ "experiment", "dataset", "models", "include_automl", "split", "tuning", "budget", "automl", "online", "grid", "seeds", "output_dir", "workers" };
    for (const auto &[key, value] : j.items()) {
        if (!known.contains(key)) {
            throw config_error("unknown config key '" + key + "'");
        }
    }
    RunConfig c;
    try {
        if (j.contains("experiment")) {
            c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
        }
        if (j.contains("dataset")) {
            const auto &d = j.at("dataset");
            for (const auto &p : d.value("files", std::vector<std::string>{})) {
                c.dataset.files.emplace_back(p);
            }
            c.dataset.data_dir = d.value("data_dir", std::string{});
            if (d.contains("synthetic")) {
                c.dataset.synthetic = synthetic_spec_from_json(d.at("synthetic"));
            }
            c.dataset.synthetic_seed = d.value("seed", std::uint64_t{ 0 });
        }
        for (const auto &m : j.value("models", nlohmann::json::array())) {
            c.models.push_back(model_spec_from_json(m));
        }
        c.include_automl = j.value("include_automl", c.include_automl);
        if (j.contains("split")) {
            const auto &s = j.at("split");
            c.k_train = s.value("k_train", c.k_train);
            c.train_fraction = s.value("train_fraction", c.train_fraction);
            c.folds = s.value("folds", c.folds);
        }
        if (j.contains("tuning")) {
            c.tuning_trials = j.at("tuning").value("trials", c.tuning_trials);
        }
        if (j.contains("budget")) {
            c.budget = search::SearchBudget::from_json(j.at("budget"));
        }
        if (j.contains("automl")) {
            c.automl = search::SearchOptions::from_json(j.at("automl"));
        }
        if (j.contains("online") && j.at("online").contains("step_budget")) {
            c.step_budget = search::SearchBudget::from_json(j.at("online").at("step_budget"));
        }
        if (j.contains("grid")) {
            const auto &g = j.at("grid");
            c.grid.feature_x = g.value("feature_x", c.grid.feature_x);
            c.grid.feature_y = g.value("feature_y", c.grid.feature_y);
            c.grid.resolution = g.value("resolution", c.grid.resolution);
            if (g.contains("bounds")) {
                const auto b = g.at("bounds").get<std::vector<double>>();
                if (b.size() != 4) {
                    throw config_error("grid bounds are [x_low, x_high, y_low, y_high]");
                }
                c.grid.bounds = metrics::GridBounds{ b[0], b[1], b[2], b[3] };
            }
        }
        c.seeds = j.value("seeds", c.seeds);
        c.output_dir = j.value("output_dir", c.output_dir.string());
        c.workers = j.value("workers", c.workers);
    } catch (const nlohmann::json::exception &e) {
        throw config_error(std::string{ "malformed config: " } + e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path &path) {
    std::ifstream f{ path };
    if (!f) {
        throw config_error("cannot open config " + path.string());
    }
    std::stringstream buffer;
    buffer << f.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buffer.str(), nullptr, true, true);
    } catch (const nlohmann::json::parse_error &e) {
        throw config_error(path.string() + ": " + e.what());
    }
    auto cfg = RunConfig::from_json(j);
    // relative dataset paths resolve against the config's directory
    const auto base = path.parent_path();
    auto resolve = [&](fs::path &p) {
        if (!p.empty() && p.is_relative()) {
            p = base / p;
        }
    };
    for (auto &p : cfg.dataset.files) {
        resolve(p);
    }
    resolve(cfg.dataset.data_dir);
    return cfg;
}

void assert_hygiene(const search::SearchResult &result, std::span<const std::size_t> test_indices) {
    const std::set<std::size_t> test(test_indices.begin(), test_indices.end());
    const std::set<std::size_t> holdout(result.holdout_ids.begin(), result.holdout_ids.end());
    for (const auto i : result.fit_ids) {
        if (test.contains(i)) {
            throw error(fmt::format("hygiene violation: test sample {} reached trial training", i));
        }
        if (holdout.contains(i)) {
            throw error(fmt::format("hygiene violation: sample {} is in both fit and hold-out sets", i));
        }
    }
    for (const auto i : result.holdout_ids) {
        if (test.contains(i)) {
            throw error(fmt::format("hygiene violation: test sample {} reached trial validation", i));
        }
    }
}

ensemble::Member fit_pipeline(const ModelSpec &spec, const LabeledData &train, std::span<const int> classes, std::uint64_t seed) {
    auto prep = preprocess::fit_preprocessor(spec.preprocess, train.X, train.y);
    const auto weights = preprocess::sample_weights(spec.preprocess, train.y);
    learners::TrainOptions options;
    options.classes.assign(classes.begin(), classes.end());
    auto model = learners::train(spec.algorithm, spec.params, prep.apply(train.X), train.y, weights, seed, options);
    return { std::move(model), std::move(prep) };
}

metrics::EvalReport score_predictions(std::span<const int> y_true, const Matrix &proba, std::span<const int> model_classes, std::span<const int> all_classes) {
    const auto pred = learners::labels_from_proba(proba, model_classes);
    auto report = metrics::evaluate(y_true, pred, all_classes);
    report.roc = metrics::roc_auc_ovr(y_true, proba, model_classes);
    return report;
}

SeedOutput run_seed(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log) {
    const Stopwatch clock;
    SeedOutput out;
    switch (cfg.experiment) {
        case Experiment::benchmark: out = run_benchmark(cfg, ds, seed, log); break;
        case Experiment::cv_compare: out = run_cv_compare(cfg, ds, seed, log); break;
        case Experiment::online: out = run_online(cfg, ds, seed, log); break;
        case Experiment::ablation: out = run_ablation(cfg, ds, seed, log); break;
        case Experiment::linearity: out = run_linearity(cfg, ds, seed, log); break;
        case Experiment::automl: out = run_automl(cfg, ds, seed, log); break;
        case Experiment::grid: out = run_grid(cfg, ds, seed, log); break;
    }
    out.seed = seed;
    out.results["seed"] = seed;
    out.results["experiment"] = to_string(cfg.experiment);
    out.timings["total"] = clock.seconds();
    return out;
}

nlohmann::json aggregate_rows(std::span<const SeedOutput> seeds) {
    std::vector<std::string> names;
    std::map<std::string, std::vector<std::string>> metric_order;
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
    for (const auto &s : seeds) {
        for (const auto &row : s.results.at("rows")) {
            const auto name = row.at("name").get<std::string>();
            if (!values.contains(name)) {
                names.push_back(name);
            }
            auto &per_metric = values[name];
            for (const auto &[metric, v] : row.at("metrics").items()) {
                if (!v.is_number()) {
                    continue;
                }
                if (!per_metric.contains(metric)) {
                    metric_order[name].push_back(metric);
                }
                per_metric[metric].push_back(v.get<double>());
            }
        }
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto &name : names) {
        nlohmann::json m = nlohmann::json::object();
        for (const auto &metric : metric_order[name]) {
            m[metric] = metrics::aggregate_runs(values[name][metric]).to_json();
        }
        out.push_back({ { "name", name }, { "metrics", m } });
    }
    return out;
}

RunOutput run_experiment(const RunConfig &cfg, std::ostream &log) {
    cfg.validate();
    const auto ds = cfg.dataset.load();
    log_line(log, fmt::format("{}: {} samples in {} batches, {} features, {} classes", to_string(cfg.experiment), ds.size(), ds.batch_count(), ds.feature_dim(), ds.class_count()));

    RunOutput out;
    out.seeds.resize(cfg.seeds.size());
    for (std::size_t start = 0; start < cfg.seeds.size(); start += cfg.workers) {
        const std::size_t stop = std::min(cfg.seeds.size(), start + cfg.workers);
        if (stop - start == 1) {
            out.seeds[start] = run_seed(cfg, ds, cfg.seeds[start], log);
            continue;
        }
        std::vector<std::future<SeedOutput>> futures;
        for (std::size_t k = start; k < stop; ++k) {
            futures.push_back(std::async(std::launch::async, [&, k] { return run_seed(cfg, ds, cfg.seeds[k], log); }));
        }
        for (std::size_t k = start; k < stop; ++k) {
            out.seeds[k] = futures[k - start].get();
        }
    }

    nlohmann::json per_seed = nlohmann::json::array();
    nlohmann::json timings = nlohmann::json::array();
    for (const auto &s : out.seeds) {
        per_seed.push_back(s.results);
        timings.push_back({ { "seed", s.seed }, { "seconds", s.timings } });
    }
    const auto aggregate = aggregate_rows(out.seeds);
    out.results = { { "experiment", to_string(cfg.experiment) },
                    { "dataset", { { "samples", ds.size() }, { "batches", ds.batch_count() }, { "feature_dim", ds.feature_dim() }, { "class_count", ds.class_count() } } },
                    { "seeds", cfg.seeds },
                    { "aggregate", aggregate },
                    { "per_seed", per_seed } };
    out.timings = { { "experiment", to_string(cfg.experiment) }, { "per_seed", timings } };

    std::string csv = "name,metric,mean,std,sample_std,min,max,count\n";
    for (const auto &row : aggregate) {
        const auto name = row.at("name").get<std::string>();
        for (const auto &[metric, a] : row.at("metrics").items()) {
            csv += fmt::format("{},{},{},{},{},{},{},{}\n", name, metric, a.at("mean").get<double>(), a.at("std").get<double>(), a.at("sample_std").get<double>(), a.at("min").get<double>(), a.at("max").get<double>(), a.at("count").get<std::size_t>());
        }
        const auto &m = row.at("metrics");
        for (const auto *key : { "macro_f1", "paradigm_f1", "cv_accuracy", "mean_accuracy", "test_accuracy", "accuracy" }) {
            if (m.contains(key)) {
                out.summary.push_back(fmt::format("{:<22} {} {:.4f} +- {:.4f} over {} seed(s)", name, key, m.at(key).at("mean").get<double>(), m.at(key).at("std").get<double>(), cfg.seeds.size()));
                break;
            }
        }
    }

    const auto &dir = cfg.output_dir;
    write_file(dir / "resolved_config.json", dump(cfg.to_json()));
    write_file(dir / "results.json", dump(out.results));
    write_file(dir / "summary.csv", csv);
    write_file(dir / "timings.json", dump(out.timings));
    for (const auto &s : out.seeds) {
        const auto seed_dir = dir / fmt::format("seed_{}", s.seed);
        write_file(seed_dir / "results.json", dump(s.results));
        for (const auto &[name, contents] : s.files) {
            write_file(seed_dir / name, contents);
        }
    }
    return out;
}

FetchCheck check_gas_dataset(const data::DriftDataset &ds) {
    FetchCheck fc;
    fc.ok = true;
    auto check = [&](bool pass, const std::string &what) {
        fc.ok = fc.ok && pass;
        fc.lines.push_back(fmt::format("{} {}", pass ? "ok  " : "FAIL", what));
    };
    const auto &ref = data::gas_reference_counts();
    check(ds.batch_count() == ref.size(), fmt::format("batch count {} (expected {})", ds.batch_count(), ref.size()));
    std::vector<std::array<std::size_t, 6>> counts(ds.batch_count(), std::array<std::size_t, 6>{});
    std::array<std::size_t, 6> totals{};
    std::size_t out_of_range = 0;
    for (std::size_t b = 0; b < ds.batch_count(); ++b) {
        for (const auto &s : ds.batch(b)) {
            if (s.label >= 1 && s.label <= 6) {
                ++counts[b][static_cast<std::size_t>(s.label - 1)];
                ++totals[static_cast<std::size_t>(s.label - 1)];
            } else {
                ++out_of_range;
            }
        }
    }
    check(out_of_range == 0, fmt::format("{} records with labels outside 1..6", out_of_range));
    for (std::size_t b = 0; b < std::min(ds.batch_count(), ref.size()); ++b) {
        check(counts[b] == ref[b], fmt::format("batch {} class counts {}", b + 1, fmt::join(counts[b], "/")));
    }
    check(ds.size() == data::gas_reference_total, fmt::format("total records {} (expected {})", ds.size(), data::gas_reference_total));
    if (ds.batch_count() >= 10) {
        check(ds.batch_sizes()[9] == 3600, fmt::format("batch 10 size {} (expected 3600)", ds.batch_sizes()[9]));
    }
    check(totals == data::gas_reference_class_totals(), fmt::format("class totals {}", fmt::join(totals, "/")));
    std::size_t train_size = 0;
    if (ds.batch_count() > 5) {
        train_size = data::chronological_split(ds, 5).train_indices.size();
        std::size_t expected = 0;
        for (std::size_t b = 0; b < 5; ++b) {
            expected += ds.batch_sizes()[b];
        }
        check(train_size == expected, fmt::format("k_train=5 training set {} samples (file contents {}, reference {})", train_size, expected, data::gas_reference_train_size));
    }
    fc.details = { { "ok", fc.ok },
                   { "batch_sizes", ds.batch_sizes() },
                   { "class_totals", totals },
                   { "total", ds.size() },
                   { "feature_dim", ds.feature_dim() },
                   { "train_size_k5", train_size },
                   { "reference_train_size", data::gas_reference_train_size } };
    return fc;
}

}  // namespace driftml::experiments
