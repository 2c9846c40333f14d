#include "driftml/experiments.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace driftml;
using namespace driftml::experiments;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
    const auto dir = fs::temp_directory_path() / ("driftml_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &p) {
    std::ifstream f{ p };
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

data::SyntheticSpec small_spec(double drift) {
    data::SyntheticSpec s;
    s.class_count = 3;
    s.feature_dim = 4;
    s.batch_count = 4;
    s.samples_per_batch = 90;
    s.drift_magnitude = { 0.0, drift, 2 * drift, 3 * drift };
    s.noise_std = 0.5;
    return s;
}

RunConfig small_config(Experiment e, double drift = 0.4) {
    RunConfig c;
    c.experiment = e;
    c.dataset.synthetic = small_spec(drift);
    c.dataset.synthetic_seed = 5;
    c.models = { ModelSpec{ learners::AlgorithmId::random_forest, { { "n_estimators", std::int64_t{ 32 } } }, preprocess::pinned_config(), "" }, ModelSpec{ learners::AlgorithmId::knn, {}, preprocess::pinned_config(), "" } };
    c.k_train = 2;
    c.folds = 4;
    c.tuning_trials = 3;
    c.budget = { 60.0, 20.0, 8, 4 };
    c.step_budget = { 30.0, 10.0, 4, 3 };
    c.automl.algorithms = { learners::AlgorithmId::random_forest, learners::AlgorithmId::knn, learners::AlgorithmId::gaussian_nb, learners::AlgorithmId::logistic_regression };
    c.automl.warmstart_count = 3;
    c.automl.surrogate_min_points = 4;
    c.automl.candidates = 50;
    c.seeds = { 1 };
    c.grid.resolution = 6;
    return c;
}

const nlohmann::json &row(const SeedOutput &s, const std::string &name) {
    for (const auto &r : s.results.at("rows"))
        if (r.at("name") == name) return r.at("metrics");
    throw std::out_of_range(name);
}

}  // namespace

TEST(Config, ParsesCommentedFileAndResolvesPaths) {
    const auto dir = scratch_dir("config");
    std::ofstream{ dir / "run.json" } << R"({
        // benchmark on local files
        "experiment": "cv-compare",
        "dataset": { "data_dir": "data/gas" },
        "models": ["random_forest", { "algorithm": "svm_rbf", "params": { "C": 10.0 }, "name": "rbf" }],
        /* small split */
        "split": { "k_train": 3, "folds": 5 },
        "seeds": [4, 7]
    })";
    const auto cfg = load_run_config(dir / "run.json");
    EXPECT_EQ(cfg.experiment, Experiment::cv_compare);
    EXPECT_EQ(cfg.dataset.data_dir, dir / "data/gas");
    ASSERT_EQ(cfg.models.size(), 2u);
    EXPECT_EQ(cfg.models[1].label(), "rbf");
    EXPECT_DOUBLE_EQ(cfg.models[1].params.real("C"), 10.0);
    EXPECT_EQ(cfg.k_train, 3u);
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{ 4, 7 }));
    EXPECT_NO_THROW(cfg.validate());
    const auto again = RunConfig::from_json(cfg.to_json());
    EXPECT_EQ(again.to_json(), cfg.to_json());
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW((void)RunConfig::from_json(nlohmann::json{ { "colour", 1 } }), config_error);
    EXPECT_THROW((void)RunConfig::from_json(nlohmann::json{ { "experiment", "nonsense" } }), config_error);
    EXPECT_THROW((void)RunConfig::from_json(nlohmann::json{ { "models", { "gradient_descent" } } }), config_error);
    EXPECT_THROW((void)load_run_config("/nonexistent/run.json"), config_error);

    auto c = small_config(Experiment::benchmark);
    c.models.clear();
    c.include_automl = false;
    EXPECT_THROW(c.validate(), config_error);
    c = small_config(Experiment::benchmark);
    c.seeds.clear();
    EXPECT_THROW(c.validate(), config_error);
    c = small_config(Experiment::benchmark);
    c.dataset.files = { "a.dat" };
    EXPECT_THROW(c.validate(), config_error);
}

TEST(Config, ExperimentNames) {
    for (const auto e : { Experiment::benchmark, Experiment::cv_compare, Experiment::online, Experiment::ablation, Experiment::linearity, Experiment::automl, Experiment::grid }) {
        EXPECT_EQ(experiment_from_string(to_string(e)), e);
    }
    EXPECT_EQ(experiment_from_string("cv-compare"), Experiment::cv_compare);
}

TEST(Runs, BenchmarkHasOneRowPerModelPlusAutoml) {
    const auto cfg = small_config(Experiment::benchmark);
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 1, log);
    ASSERT_EQ(out.results.at("rows").size(), 3u);
    for (const auto *name : { "random_forest", "knn", "automl_dc" }) {
        const auto &m = row(out, name);
        for (const auto *k : { "precision", "recall", "macro_f1", "accuracy" }) {
            EXPECT_GE(m.at(k).get<double>(), 0.0);
            EXPECT_LE(m.at(k).get<double>(), 1.0);
        }
    }
}

TEST(Runs, ZeroDriftHoldoutAndTestAgree) {
    auto cfg = small_config(Experiment::benchmark, 0.0);
    cfg.models.resize(1);
    cfg.include_automl = false;
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 2, log);
    const auto &m = row(out, "random_forest");
    EXPECT_NEAR(m.at("holdout_f1").get<double>(), m.at("macro_f1").get<double>(), 0.05);
}

TEST(Runs, CvCompareZeroDriftColumnsAgree) {
    auto cfg = small_config(Experiment::cv_compare, 0.0);
    cfg.models.resize(1);
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 3, log);
    EXPECT_LE(std::abs(row(out, "random_forest").at("drift_gap").get<double>()), 0.05);
}

TEST(Runs, CvCompareDriftOpensAGap) {
    auto cfg = small_config(Experiment::cv_compare, 1.0);
    cfg.models.resize(1);
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 3, log);
    const auto &m = row(out, "random_forest");
    EXPECT_GT(m.at("cv_f1").get<double>(), m.at("paradigm_f1").get<double>());
}

TEST(Runs, OnlineCurvesHaveOnePointPerStep) {
    const auto cfg = small_config(Experiment::online);
    std::ostringstream log;
    const auto ds = cfg.dataset.load();
    const auto out = run_seed(cfg, ds, 1, log);
    for (const auto &[name, curve] : out.results.at("curves").items()) {
        EXPECT_EQ(curve.at("accuracy").size(), ds.batch_count() - 1) << name;
    }
    EXPECT_TRUE(row(out, "automl_dc").contains("dominance_vs_random_forest"));

    auto two = small_config(Experiment::online);
    two.dataset.synthetic->batch_count = 2;
    two.dataset.synthetic->drift_magnitude = { 0.0, 0.2 };
    const auto short_run = run_seed(two, two.dataset.load(), 1, log);
    for (const auto &[name, curve] : short_run.results.at("curves").items()) EXPECT_EQ(curve.at("accuracy").size(), 1u) << name;
}

TEST(Runs, AblationHasFourVariants) {
    const auto cfg = small_config(Experiment::ablation);
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 1, log);
    ASSERT_EQ(out.results.at("rows").size(), 4u);
    EXPECT_EQ(row(out, "no_ensemble").at("ensemble_size"), 1);
    for (const auto *v : { "all", "no_ensemble", "no_preprocessing", "no_meta" }) EXPECT_TRUE(out.timings.at(v).contains("time_per_trial")) << v;
}

TEST(Runs, LinearityOnSeparableAndRingData) {
    auto cfg = small_config(Experiment::linearity, 0.0);
    cfg.models.clear();
    cfg.dataset.synthetic->class_count = 2;
    cfg.dataset.synthetic->center_scale = 3.0;
    cfg.dataset.synthetic->noise_std = 0.3;
    std::ostringstream log;
    const auto sep = run_seed(cfg, cfg.dataset.load(), 1, log);
    EXPECT_GE(row(sep, "svm_linear").at("cv_accuracy").get<double>(), 0.99);
    EXPECT_GE(row(sep, "svm_rbf").at("cv_accuracy").get<double>(), 0.99);

    cfg.dataset.synthetic->layout = data::SyntheticLayout::rings;
    cfg.dataset.synthetic->feature_dim = 2;
    cfg.dataset.synthetic->center_scale = 1.0;
    cfg.dataset.synthetic->noise_std = 0.1;
    cfg.models = { ModelSpec{ learners::AlgorithmId::svm_rbf, { { "gamma", 1.0 }, { "C", 10.0 } }, preprocess::pinned_config(), "" } };
    const auto rings = run_seed(cfg, cfg.dataset.load(), 1, log);
    const double lin = row(rings, "svm_linear").at("cv_accuracy").get<double>();
    const double rbf = row(rings, "svm_rbf").at("cv_accuracy").get<double>();
    EXPECT_GE(rbf - lin, 0.2);

    // nearest-neighbour sanity oracle: the rings are learnable
    cfg.experiment = Experiment::cv_compare;
    cfg.models = { ModelSpec{ learners::AlgorithmId::knn, {}, preprocess::pinned_config(), "" } };
    cfg.tuning_trials = 0;
    const auto knn = run_seed(cfg, cfg.dataset.load(), 1, log);
    EXPECT_GE(row(knn, "knn").at("cv_accuracy").get<double>(), rbf - 0.05);
}

TEST(Runs, AutomlExportsSnapshotAndTrace) {
    const auto cfg = small_config(Experiment::automl);
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 1, log);
    std::set<std::string> names;
    for (const auto &[n, body] : out.files) names.insert(n);
    for (const auto *n : { "model.json", "composition.json", "report.json", "trace.jsonl", "roc.csv" }) EXPECT_TRUE(names.contains(n)) << n;
    for (const auto &[n, body] : out.files) {
        if (n == "model.json") {
            const auto model = ensemble::EnsembleModel::from_json(nlohmann::json::parse(body));
            EXPECT_FALSE(model.empty());
        }
    }
}

TEST(Runs, AutomlHalfTrainingVariant) {
    auto cfg = small_config(Experiment::automl);
    cfg.train_fraction = 0.5;
    std::ostringstream log;
    const auto ds = cfg.dataset.load();
    const auto out = run_seed(cfg, ds, 1, log);
    EXPECT_EQ(out.results.at("split").at("train_size").get<std::size_t>(), ds.size() / 2);
    EXPECT_TRUE(row(out, "automl_dc").contains("min_class_f1"));
}

TEST(Runs, GridExportMatchesResolution) {
    const auto cfg = small_config(Experiment::grid);
    std::ostringstream log;
    const auto out = run_seed(cfg, cfg.dataset.load(), 1, log);
    bool any = false;
    for (const auto &[n, body] : out.files) {
        if (n.rfind("grid_", 0) == 0) {
            any = true;
            EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 1 + 36) << n;
        }
    }
    EXPECT_TRUE(any);
}

TEST(Files, RerunsAreByteIdentical) {
    auto cfg = small_config(Experiment::benchmark);
    cfg.seeds = { 1, 2 };
    std::ostringstream log;
    cfg.output_dir = scratch_dir("rerun_a");
    (void)run_experiment(cfg, log);
    const auto a = cfg.output_dir;
    cfg.output_dir = scratch_dir("rerun_b");
    (void)run_experiment(cfg, log);
    const auto b = cfg.output_dir;
    for (const auto *f : { "results.json", "summary.csv", "seed_1/results.json", "seed_2/report_knn.json" }) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_TRUE(fs::exists(a / "resolved_config.json"));
    EXPECT_TRUE(fs::exists(a / "timings.json"));
    const auto results = nlohmann::json::parse(slurp(a / "results.json"));
    EXPECT_EQ(results.at("per_seed").size(), 2u);
    EXPECT_EQ(slurp(a / "results.json").find("time"), std::string::npos);
}

TEST(Files, SeedWorkersDoNotChangeResults) {
    auto cfg = small_config(Experiment::benchmark);
    cfg.include_automl = false;
    cfg.seeds = { 1, 2 };
    std::ostringstream log;
    cfg.output_dir = scratch_dir("workers_1");
    (void)run_experiment(cfg, log);
    const auto one = slurp(cfg.output_dir / "results.json");
    cfg.workers = 2;
    cfg.output_dir = scratch_dir("workers_2");
    (void)run_experiment(cfg, log);
    EXPECT_EQ(slurp(cfg.output_dir / "results.json"), one);
}

TEST(Aggregation, RowsAggregateAcrossSeeds) {
    SeedOutput a, b;
    a.results = { { "rows", { { { "name", "m" }, { "metrics", { { "f1", 0.2 }, { "tag", "x" } } } } } } };
    b.results = { { "rows", { { { "name", "m" }, { "metrics", { { "f1", 0.6 } } } } } } };
    const std::vector<SeedOutput> seeds{ a, b };
    const auto agg = aggregate_rows(seeds);
    ASSERT_EQ(agg.size(), 1u);
    EXPECT_DOUBLE_EQ(agg[0].at("metrics").at("f1").at("mean").get<double>(), 0.4);
    EXPECT_DOUBLE_EQ(agg[0].at("metrics").at("f1").at("std").get<double>(), 0.2);
    EXPECT_FALSE(agg[0].at("metrics").contains("tag"));
}

TEST(FetchCheck, SyntheticDataIsRejected) {
    const auto ds = data::synthesize_drift(small_spec(0.1), 1);
    const auto check = check_gas_dataset(ds);
    EXPECT_FALSE(check.ok);
    EXPECT_FALSE(check.lines.empty());
}

TEST(Hygiene, DetectsLeakedTestRows) {
    search::SearchResult r;
    r.fit_ids = { 0, 1, 2 };
    r.holdout_ids = { 3, 4 };
    const std::vector<std::size_t> clean{ 5, 6 };
    EXPECT_NO_THROW(assert_hygiene(r, clean));
    const std::vector<std::size_t> leak{ 4, 9 };
    EXPECT_THROW(assert_hygiene(r, leak), error);
    r.holdout_ids = { 2 };
    EXPECT_THROW(assert_hygiene(r, clean), error);
}
