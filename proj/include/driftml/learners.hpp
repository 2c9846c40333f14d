#ifndef DRIFTML_LEARNERS_HPP
#define DRIFTML_LEARNERS_HPP

#include "driftml/common.hpp"
#include "driftml/params.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace driftml::learners {

enum class AlgorithmId {
    decision_tree,
    random_forest,
    knn,
    logistic_regression,
    gaussian_nb,
    mlp,
    passive_aggressive,
    gradient_boosting,
    adaboost,
    bagging,
    svm_linear,
    svm_rbf,
};

inline constexpr std::array<AlgorithmId, 12> all_algorithms{
    AlgorithmId::decision_tree, AlgorithmId::random_forest, AlgorithmId::knn, AlgorithmId::logistic_regression,
    AlgorithmId::gaussian_nb, AlgorithmId::mlp, AlgorithmId::passive_aggressive, AlgorithmId::gradient_boosting,
    AlgorithmId::adaboost, AlgorithmId::bagging, AlgorithmId::svm_linear, AlgorithmId::svm_rbf,
};

/// Stable identifier, e.g. "random_forest".
[[nodiscard]] std::string_view to_string(AlgorithmId id) noexcept;
/// Human-readable table label, e.g. "Random Forest".
[[nodiscard]] std::string_view display_name(AlgorithmId id) noexcept;
/// Accepts the identifier form; throws config_error for unknown names.
[[nodiscard]] AlgorithmId algorithm_from_string(std::string_view name);

/// The hyperparameter space of one algorithm, conditionals included.
[[nodiscard]] const ParamSpace &default_space(AlgorithmId id);

struct TrainingInfo {
    std::uint64_t seed{ 0 };
    std::size_t iterations{ 0 };
    bool early_stopped{ false };
    bool constant{ false };  // single present class; predicts it everywhere
};

namespace detail {

/// Fitted state of one algorithm. Columns of proba() follow the model's class list.
class Classifier {
  public:
    virtual ~Classifier() = default;
    [[nodiscard]] virtual Matrix proba(const Matrix &X) const = 0;
    [[nodiscard]] virtual nlohmann::json state() const = 0;
};

}  // namespace detail

/// A fitted classifier. Immutable and cheap to copy (shared state).
class TrainedModel {
  public:
    TrainedModel() = default;
    TrainedModel(AlgorithmId algorithm, ParamSet params, std::vector<int> classes, std::size_t input_dim, TrainingInfo info, std::shared_ptr<const detail::Classifier> impl);

    [[nodiscard]] AlgorithmId algorithm() const noexcept { return algorithm_; }
    [[nodiscard]] const ParamSet &params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<int> &classes() const noexcept { return classes_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] const TrainingInfo &info() const noexcept { return info_; }
    [[nodiscard]] bool valid() const noexcept { return impl_ != nullptr; }

    /// Row-stochastic; columns follow classes().
    [[nodiscard]] Matrix predict_proba(const Matrix &X) const;
    /// Class label of the row-wise argmax of predict_proba (ties to the lowest class).
    [[nodiscard]] std::vector<int> predict(const Matrix &X) const;

    /// Versioned snapshot: format tag, algorithm id, hyperparameters, classes, fitted state.
    [[nodiscard]] nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json &j);

    /// FNV-1a hash of the serialized snapshot; equal for equal fitted state.
    [[nodiscard]] std::uint64_t state_hash() const;

  private:
    AlgorithmId algorithm_{ AlgorithmId::decision_tree };
    ParamSet params_;
    std::vector<int> classes_;
    std::size_t input_dim_{ 0 };
    TrainingInfo info_{};
    std::shared_ptr<const detail::Classifier> impl_;
};

struct TrainOptions {
    /// Class list of the model (defaults to the sorted labels present in y). Absent classes get probability 0.
    std::vector<int> classes;
    Deadline deadline{};
};

/// Fits `algorithm` with hyperparameters `params` (missing entries take the space defaults).
///
/// Deterministic in (algorithm, params, X, y, weights, seed). Empty `weights` means all ones.
/// Training data with a single present class yields a constant predictor.
[[nodiscard]] TrainedModel train(AlgorithmId algorithm, const ParamSet &params, const Matrix &X, std::span<const int> y, std::span<const double> weights, std::uint64_t seed, const TrainOptions &options = {});

[[nodiscard]] inline std::vector<int> predict(const TrainedModel &m, const Matrix &X) { return m.predict(X); }
[[nodiscard]] inline Matrix predict_proba(const TrainedModel &m, const Matrix &X) { return m.predict_proba(X); }

/// Labels from a probability matrix; argmax per row, ties to the lowest column.
[[nodiscard]] std::vector<int> labels_from_proba(const Matrix &proba, std::span<const int> classes);

/// Row-wise softmax in place.
void softmax_rows(Matrix &scores);

}  // namespace driftml::learners

#endif  // DRIFTML_LEARNERS_HPP
