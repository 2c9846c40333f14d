#ifndef DRIFTML_EXPERIMENTS_HPP
#define DRIFTML_EXPERIMENTS_HPP

#include "driftml/data.hpp"
#include "driftml/learners.hpp"
#include "driftml/metrics.hpp"
#include "driftml/preprocess.hpp"
#include "driftml/search.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driftml::experiments {

enum class Experiment { benchmark, cv_compare, online, ablation, linearity, automl, grid };

[[nodiscard]] std::string_view to_string(Experiment e) noexcept;
/// Accepts both "cv_compare" and "cv-compare".
[[nodiscard]] Experiment experiment_from_string(std::string_view s);

/// Exactly one of files, data_dir (batch1.dat..batch10.dat) or synthetic.
struct DatasetSource {
    std::vector<std::filesystem::path> files;
    std::filesystem::path data_dir;
    std::optional<data::SyntheticSpec> synthetic;
    std::uint64_t synthetic_seed{ 0 };

    [[nodiscard]] data::DriftDataset load() const;
};

struct ModelSpec {
    learners::AlgorithmId algorithm{ learners::AlgorithmId::random_forest };
    ParamSet params;  // overrides on top of the defaults
    preprocess::PreprocessConfig preprocess{ preprocess::pinned_config() };
    std::string name;  // report label; the algorithm id when empty

    [[nodiscard]] std::string label() const { return name.empty() ? std::string{ learners::to_string(algorithm) } : name; }
};

struct GridSpec {
    std::size_t feature_x{ 0 };
    std::size_t feature_y{ 1 };
    std::size_t resolution{ 50 };
    std::optional<metrics::GridBounds> bounds;  // training min/max of both features when absent
};

struct RunConfig {
    Experiment experiment{ Experiment::benchmark };
    DatasetSource dataset;
    std::vector<ModelSpec> models;
    bool include_automl{ true };  // benchmark and online add an AutoML row
    std::size_t k_train{ 5 };
    double train_fraction{ 0.0 };  // automl: > 0 trains on this chronological fraction of all samples
    std::size_t folds{ 10 };
    std::size_t tuning_trials{ 20 };  // random-search trials per baseline; 0 keeps the configured params
    search::SearchBudget budget;
    search::SearchOptions automl;
    search::SearchBudget step_budget{ 60.0, 30.0, 20, 10 };  // per incremental step in online
    GridSpec grid;
    std::vector<std::uint64_t> seeds{ 0, 1, 2, 3, 4, 5, 6, 7, 8, 9 };
    std::filesystem::path output_dir{ "results" };
    std::size_t workers{ 1 };  // seeds run concurrently

    /// Throws config_error for missing or inconsistent fields.
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json &j);
};

/// Reads a structured-text config; `//` and `/* */` comments are allowed.
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path &path);

[[nodiscard]] nlohmann::json synthetic_spec_to_json(const data::SyntheticSpec &s);
[[nodiscard]] data::SyntheticSpec synthetic_spec_from_json(const nlohmann::json &j);

/// Throws error unless the search only ever touched rows outside `test_indices`
/// and kept its fit and hold-out rows apart.
void assert_hygiene(const search::SearchResult &result, std::span<const std::size_t> test_indices);

/// Fits the pipeline of `spec` with default-completed parameters.
[[nodiscard]] ensemble::Member fit_pipeline(const ModelSpec &spec, const search::LabeledData &train, std::span<const int> classes, std::uint64_t seed);

/// Test-set report with per-class ROC.
[[nodiscard]] metrics::EvalReport score_predictions(std::span<const int> y_true, const Matrix &proba, std::span<const int> model_classes, std::span<const int> all_classes);

struct SeedOutput {
    std::uint64_t seed{ 0 };
    nlohmann::json results;  // contains "rows": [{ "name", "metrics": {...} }]
    nlohmann::json timings;
    std::vector<std::pair<std::string, std::string>> files;  // (relative name, contents)
};

struct RunOutput {
    nlohmann::json results;  // per-seed rows plus aggregates over seeds
    nlohmann::json timings;
    std::vector<SeedOutput> seeds;
    std::vector<std::string> summary;  // human-readable lines
};

/// One seed of one experiment; no files are written.
[[nodiscard]] SeedOutput run_seed(const RunConfig &cfg, const data::DriftDataset &ds, std::uint64_t seed, std::ostream &log);

/// Runs every seed and writes results.json, summary.csv, resolved_config.json, timings.json and
/// seed_<n>/ outputs below cfg.output_dir. Results files carry no timings.
RunOutput run_experiment(const RunConfig &cfg, std::ostream &log);

/// Aggregates numeric row metrics across seeds: { name: { metric: RunAggregate json } }.
[[nodiscard]] nlohmann::json aggregate_rows(std::span<const SeedOutput> seeds);

struct FetchCheck {
    bool ok{ false };
    std::vector<std::string> lines;
    nlohmann::json details;
};

/// Compares a loaded dataset against the reference per-batch class counts and totals.
[[nodiscard]] FetchCheck check_gas_dataset(const data::DriftDataset &ds);

}  // namespace driftml::experiments

#endif  // DRIFTML_EXPERIMENTS_HPP
