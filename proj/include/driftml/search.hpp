#ifndef DRIFTML_SEARCH_HPP
#define DRIFTML_SEARCH_HPP

#include "driftml/common.hpp"
#include "driftml/data.hpp"
#include "driftml/ensemble.hpp"
#include "driftml/learners.hpp"
#include "driftml/params.hpp"
#include "driftml/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driftml::search {

enum class Provenance { warmstart, random, surrogate };
enum class TrialStatus { ok, timeout, failed };

[[nodiscard]] std::string_view to_string(Provenance p) noexcept;
[[nodiscard]] std::string_view to_string(TrialStatus s) noexcept;
[[nodiscard]] Provenance provenance_from_string(std::string_view s);

/// One point of the joint preprocessing x algorithm x hyperparameter space.
struct Configuration {
    preprocess::PreprocessConfig preprocess{};
    learners::AlgorithmId algorithm{ learners::AlgorithmId::random_forest };
    ParamSet params;
    Provenance provenance{ Provenance::random };

    [[nodiscard]] nlohmann::json to_json() const;
    static Configuration from_json(const nlohmann::json &j);

    /// Equality of the point in the space; provenance is ignored.
    [[nodiscard]] bool same_point(const Configuration &other) const;
};

/// The joint conditional space. Parameter names: "algorithm", "<algorithm>:<name>", "pre:<name>".
class SearchSpace {
  public:
    /// `feature_dim` bounds the agglomeration cluster count. With `search_preprocessing` off
    /// every configuration carries preprocess::pinned_config().
    SearchSpace(std::vector<learners::AlgorithmId> algorithms, bool search_preprocessing, std::size_t feature_dim);

    [[nodiscard]] const ParamSpace &joint() const noexcept { return joint_; }
    [[nodiscard]] const std::vector<learners::AlgorithmId> &algorithms() const noexcept { return algorithms_; }
    [[nodiscard]] bool searches_preprocessing() const noexcept { return search_preprocessing_; }

    /// Restricts one joint parameter to a single value (integer, real or categorical domains).
    void pin(const std::string &name, const ParamValue &value);

    [[nodiscard]] ParamSet to_assignment(const Configuration &cfg) const;
    [[nodiscard]] Configuration to_configuration(const ParamSet &assignment, Provenance provenance) const;

    /// Uniform over categories and flags, (log-)uniform over ranges, conditionals respected.
    [[nodiscard]] Configuration sample(rng_type &rng) const;
    [[nodiscard]] std::string violation(const Configuration &cfg) const;
    [[nodiscard]] bool contains(const Configuration &cfg) const { return violation(cfg).empty(); }

    /// Surrogate features: one-hot categoricals, 0/1 flags, min-max (log) scaled numerics; inactive entries are -1.
    [[nodiscard]] std::vector<double> encode(const Configuration &cfg) const;
    [[nodiscard]] std::size_t encoded_width() const noexcept { return encoded_width_; }

  private:
    std::vector<learners::AlgorithmId> algorithms_;
    bool search_preprocessing_;
    ParamSpace joint_;
    std::size_t encoded_width_{ 0 };
};

[[nodiscard]] inline Configuration sample_configuration(const SearchSpace &space, rng_type &rng) { return space.sample(rng); }

/// Random-forest regression surrogate with per-point mean and variance.
class ForestSurrogate {
  public:
    struct Options {
        std::size_t trees{ 24 };
        bool bootstrap{ true };
    };

    ForestSurrogate() = default;
    /// `rows` holds one encoded configuration per row.
    void fit(const Matrix &rows, std::span<const double> scores, std::uint64_t seed, const Options &options);
    void fit(const Matrix &rows, std::span<const double> scores, std::uint64_t seed) { fit(rows, scores, seed, Options{}); }

    /// (mean, variance) across trees, variance including the within-leaf spread.
    [[nodiscard]] std::pair<double, double> predict(std::span<const double> x) const;
    [[nodiscard]] bool fitted() const noexcept { return impl_ != nullptr; }

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

/// EI for maximization: (mu - best) Phi(z) + sigma phi(z), z = (mu - best) / sigma; max(0, mu - best) when sigma = 0.
[[nodiscard]] double expected_improvement(double mu, double sigma, double best) noexcept;

struct PortfolioEntry {
    data::MetaFeatures fingerprint;
    Configuration configuration;
};

class Portfolio {
  public:
    Portfolio() = default;
    explicit Portfolio(std::vector<PortfolioEntry> entries) : entries_{ std::move(entries) } {}

    /// The 12 configurations shipped with the library, fingerprinted on synthetic drift datasets.
    static const Portfolio &shipped();

    [[nodiscard]] const std::vector<PortfolioEntry> &entries() const noexcept { return entries_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    void add(PortfolioEntry entry) { entries_.push_back(std::move(entry)); }

    [[nodiscard]] nlohmann::json to_json() const;
    static Portfolio from_json(const nlohmann::json &j);

  private:
    std::vector<PortfolioEntry> entries_;
};

/// The `count` entries nearest to `meta` by Euclidean distance over meta-features z-scored
/// across the portfolio; ties keep portfolio order. Returns everything when count exceeds the size.
[[nodiscard]] std::vector<Configuration> warmstart(const data::MetaFeatures &meta, const Portfolio &portfolio, std::size_t count);

struct LabeledData {
    Matrix X;
    std::vector<int> y;
};

struct TrialResult {
    std::size_t index{ 0 };
    Configuration configuration;
    std::optional<double> validation_score;  // macro F1; present iff status is ok
    double train_time{ 0.0 };                // seconds
    TrialStatus status{ TrialStatus::failed };
    std::string reason;
    std::optional<ensemble::Member> member;  // fitted pipeline; kept only for pool trials
    Matrix validation_proba;                  // kept only for pool trials

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Fits preprocessing and model on `train`, scores macro F1 on `validation`. Never throws for
/// training problems: timeouts and failures are reported through the status.
[[nodiscard]] TrialResult evaluate(const Configuration &cfg, const LabeledData &train, const LabeledData &validation, std::span<const int> classes, double per_trial_limit, std::uint64_t seed, const Deadline &outer = {});

struct SearchBudget {
    double wall_clock_limit{ 600.0 };
    double per_trial_limit{ 120.0 };
    std::size_t max_trials{ 100 };
    std::size_t ensemble_pool_size{ 20 };

    /// Throws config_error unless every field is positive and per_trial_limit <= wall_clock_limit.
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static SearchBudget from_json(const nlohmann::json &j);
};

enum class Strategy { bayesian, random };

struct SearchOptions {
    bool meta{ true };
    bool search_preprocessing{ true };
    bool ensembling{ true };
    double holdout_fraction{ 0.2 };
    Strategy strategy{ Strategy::bayesian };
    std::vector<learners::AlgorithmId> algorithms{ learners::all_algorithms.begin(), learners::all_algorithms.end() };
    std::size_t warmstart_count{ 8 };
    std::size_t surrogate_min_points{ 10 };
    std::size_t candidates{ 500 };
    std::size_t random_every{ 4 };  // after warm start, every random_every-th trial is random, the rest surrogate
    std::size_t workers{ 1 };
    ensemble::SelectionOptions selection{};
    const Portfolio *portfolio{ nullptr };  // shipped portfolio when null

    [[nodiscard]] nlohmann::json to_json() const;
    static SearchOptions from_json(const nlohmann::json &j);
};

struct IncumbentPoint {
    std::size_t trial{ 0 };
    double score{ 0.0 };
};

struct SearchTrace {
    std::vector<TrialResult> trials;        // completion order
    std::vector<IncumbentPoint> incumbent;  // one point per improvement
    SearchOptions options;
    std::uint64_t seed{ 0 };

    /// Line-delimited JSON: one record per trial.
    [[nodiscard]] std::string to_jsonl() const;
    [[nodiscard]] std::vector<Configuration> configurations() const;
    /// Mean wall time of completed trials.
    [[nodiscard]] double time_per_trial() const;
};

struct SearchResult {
    SearchTrace trace;
    ensemble::EnsembleModel model;  // ensemble, or the incumbent alone when ensembling is off
    ensemble::Member incumbent;
    std::size_t incumbent_trial{ 0 };
    ensemble::SelectionTrace selection;
    std::vector<std::size_t> fit_ids;      // ids of rows used to fit trial models
    std::vector<std::size_t> holdout_ids;  // ids of rows used for scoring and ensemble selection
};

/// The CASH search. `ids` name the rows of `train` (global sample indices) for hygiene checks;
/// empty means 0..n-1. Throws error("no viable configuration") when no trial completes.
[[nodiscard]] SearchResult run_search(const LabeledData &train, std::span<const std::size_t> ids, const SearchBudget &budget, const SearchOptions &options, std::uint64_t seed);

/// Surrogate-guided proposal; falls back to a random draw when `history` has fewer than
/// options.surrogate_min_points finished trials.
[[nodiscard]] Configuration suggest(std::span<const TrialResult> history, const SearchSpace &space, const SearchOptions &options, rng_type &rng);

/// Class-stratified hold-out positions (sorted). round(fraction * n_c) rows per class, each class
/// with at least two rows keeps one row on each side.
[[nodiscard]] std::vector<std::size_t> stratified_holdout(std::span<const int> y, double fraction, std::uint64_t seed);

}  // namespace driftml::search

#endif  // DRIFTML_SEARCH_HPP
