#ifndef DRIFTML_SRC_LEARNERS_INTERNAL_HPP
#define DRIFTML_SRC_LEARNERS_INTERNAL_HPP

#include "driftml/learners.hpp"

#include <memory>

namespace driftml::learners::detail {

/// Training rows with labels encoded as class positions 0..n_classes-1.
struct TrainingSet {
    const Matrix &X;
    std::span<const int> y;
    std::span<const double> w;
    std::size_t n_classes;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

struct FitContext {
    std::uint64_t seed;
    const Deadline &deadline;
    TrainingInfo &info;
};

ClassifierPtr fit_constant(std::size_t n_classes, std::size_t class_index);
ClassifierPtr fit_decision_tree(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_random_forest(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_bagging(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_adaboost(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_gradient_boosting(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_knn(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_gaussian_nb(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_logistic_regression(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_passive_aggressive(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_svm_linear(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_svm_rbf(const TrainingSet &data, const ParamSet &p, FitContext ctx);
ClassifierPtr fit_mlp(const TrainingSet &data, const ParamSet &p, FitContext ctx);

ClassifierPtr load_constant(const nlohmann::json &state);
ClassifierPtr load_decision_tree(const nlohmann::json &state);
ClassifierPtr load_random_forest(const nlohmann::json &state);
ClassifierPtr load_bagging(const nlohmann::json &state);
ClassifierPtr load_adaboost(const nlohmann::json &state);
ClassifierPtr load_gradient_boosting(const nlohmann::json &state);
ClassifierPtr load_knn(const nlohmann::json &state);
ClassifierPtr load_gaussian_nb(const nlohmann::json &state);
ClassifierPtr load_logistic_regression(const nlohmann::json &state);
ClassifierPtr load_passive_aggressive(const nlohmann::json &state);
ClassifierPtr load_svm_linear(const nlohmann::json &state);
ClassifierPtr load_svm_rbf(const nlohmann::json &state);
ClassifierPtr load_mlp(const nlohmann::json &state);

/// Softmax over one-vs-rest decision values; shared by the margin learners.
Matrix ovr_softmax(Matrix decisions);

/// Throws invalid_argument unless X has `expected` columns.
void check_width(const Matrix &X, std::size_t expected);

}  // namespace driftml::learners::detail

#endif  // DRIFTML_SRC_LEARNERS_INTERNAL_HPP
