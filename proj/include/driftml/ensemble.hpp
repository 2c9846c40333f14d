#ifndef DRIFTML_ENSEMBLE_HPP
#define DRIFTML_ENSEMBLE_HPP

#include "driftml/common.hpp"
#include "driftml/learners.hpp"
#include "driftml/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace driftml::ensemble {

/// A fitted pipeline: preprocessing followed by a model. Consumes raw feature rows.
struct Member {
    learners::TrainedModel model;
    preprocess::FittedPreprocessor preprocessor;

    [[nodiscard]] Matrix predict_proba(const Matrix &X_raw) const;
};

/// Weighted soft-voting classifier.
class EnsembleModel {
  public:
    EnsembleModel() = default;
    /// Weights must be non-negative and sum to 1; every member must share one class list.
    EnsembleModel(std::vector<Member> members, std::vector<double> weights);

    [[nodiscard]] const std::vector<Member> &members() const noexcept { return members_; }
    [[nodiscard]] const std::vector<double> &weights() const noexcept { return weights_; }
    [[nodiscard]] const std::vector<int> &classes() const noexcept { return classes_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] bool empty() const noexcept { return members_.empty(); }

    /// sum_i weight_i * member_i.predict_proba(X).
    [[nodiscard]] Matrix predict_proba(const Matrix &X) const;
    /// Row-wise argmax of predict_proba; ties to the lowest class.
    [[nodiscard]] std::vector<int> predict(const Matrix &X) const;

    /// Per member: algorithm, hyperparameters, preprocessing, weight.
    [[nodiscard]] nlohmann::json composition() const;

    [[nodiscard]] nlohmann::json to_json() const;
    static EnsembleModel from_json(const nlohmann::json &j);

  private:
    std::vector<Member> members_;
    std::vector<double> weights_;
    std::vector<int> classes_;
    std::size_t input_dim_{ 0 };
};

[[nodiscard]] inline std::vector<int> predict_ensemble(const EnsembleModel &e, const Matrix &X) { return e.predict(X); }
[[nodiscard]] inline Matrix predict_proba_ensemble(const EnsembleModel &e, const Matrix &X) { return e.predict_proba(X); }

struct SelectionOptions {
    std::size_t max_rounds{ 50 };
    std::size_t patience{ 5 };  // stop after this many rounds without a strict improvement
};

struct SelectionTrace {
    std::vector<std::size_t> picks;    // candidate chosen in each round
    std::vector<double> round_scores;  // validation macro F1 after each round
    std::size_t kept_rounds{ 0 };      // length of the best-scoring (earliest) prefix retained
    std::vector<std::size_t> counts;   // per candidate, selections within the kept prefix
    double score{ 0.0 };               // validation macro F1 of the kept prefix
};

/// Greedy forward selection with replacement over validation probability matrices.
///
/// Each round adds the candidate whose inclusion maximizes macro F1 of the averaged
/// probabilities (ties to the lowest candidate index). Columns follow `classes`.
[[nodiscard]] SelectionTrace greedy_selection(std::span<const Matrix> validation_proba, std::span<const int> val_labels, std::span<const int> classes, const SelectionOptions &options = {});

/// Runs greedy_selection and assembles the ensemble; weights are selection-count fractions.
[[nodiscard]] EnsembleModel ensemble_select(std::span<const Member> candidates, std::span<const Matrix> validation_proba, std::span<const int> val_labels, const SelectionOptions &options = {}, SelectionTrace *trace = nullptr);

}  // namespace driftml::ensemble

#endif  // DRIFTML_ENSEMBLE_HPP
