#ifndef DRIFTML_LEARNERS_OBJECTIVES_HPP
#define DRIFTML_LEARNERS_OBJECTIVES_HPP

#include "driftml/common.hpp"

#include <cstddef>
#include <span>
#include <vector>

/// Training objectives of the gradient-based learners, exposed for gradient checks.
namespace driftml::learners::objectives {

/// Multinomial logistic regression objective  sum_i w_i * CE_i + ||W||^2 / (2 C).
///
/// `coef` is row-major n_classes x (d + 1); the last column is the unregularized intercept.
/// Labels are class positions 0..n_classes-1. Writes the gradient into `grad` (same layout).
[[nodiscard]] double logistic_objective(std::span<const double> coef, const Matrix &X, std::span<const int> y, std::span<const double> w, std::size_t n_classes, double C, std::span<double> grad);

/// Fully connected network with softmax output.
struct MlpShape {
    std::vector<std::size_t> layers;  // input width, hidden widths..., class count
    bool tanh{ true };                // hidden activation; relu otherwise
    double alpha{ 1e-4 };             // L2 penalty on weights (not biases)
};

/// Parameters are packed layer by layer: W_l row-major (fan_in x fan_out), then b_l (fan_out).
[[nodiscard]] std::size_t mlp_parameter_count(const MlpShape &shape);

/// Softmax class probabilities, one row per sample.
[[nodiscard]] Matrix mlp_forward(const MlpShape &shape, std::span<const double> params, const Matrix &X);

/// sum_i w_i * CE_i / sum_i w_i + alpha * ||W||^2 / (2 n). Writes the gradient into `grad`.
[[nodiscard]] double mlp_objective(const MlpShape &shape, std::span<const double> params, const Matrix &X, std::span<const int> y, std::span<const double> w, std::span<double> grad);

}  // namespace driftml::learners::objectives

#endif  // DRIFTML_LEARNERS_OBJECTIVES_HPP
