#ifndef DRIFTML_PREPROCESS_HPP
#define DRIFTML_PREPROCESS_HPP

#include "driftml/common.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace driftml::preprocess {

enum class Imputation { none, mean, median, most_frequent };
enum class Scaling { none, standardize, minmax };
enum class FeatureStepKind { none, polynomial, agglomeration, pca };
enum class Balancing { none, inverse_frequency_weights };

[[nodiscard]] std::string_view to_string(Imputation v) noexcept;
[[nodiscard]] std::string_view to_string(Scaling v) noexcept;
[[nodiscard]] std::string_view to_string(FeatureStepKind v) noexcept;
[[nodiscard]] std::string_view to_string(Balancing v) noexcept;
[[nodiscard]] Imputation imputation_from_string(std::string_view s);
[[nodiscard]] Scaling scaling_from_string(std::string_view s);
[[nodiscard]] FeatureStepKind feature_step_from_string(std::string_view s);
[[nodiscard]] Balancing balancing_from_string(std::string_view s);

/// Polynomial feature expansion never produces more columns than this.
inline constexpr std::size_t max_polynomial_width = 4000;

struct FeatureStep {
    FeatureStepKind kind{ FeatureStepKind::none };
    bool interaction_only{ false };     // polynomial
    std::size_t cluster_count{ 1 };     // agglomeration
    std::size_t pca_dim{ 0 };           // pca: fixed output width; 0 selects by variance_fraction
    double pca_variance_fraction{ 1.0 };  // pca: smallest width explaining this share

    friend bool operator==(const FeatureStep &, const FeatureStep &) = default;
};

struct PreprocessConfig {
    Imputation imputation{ Imputation::none };
    Scaling scaling{ Scaling::none };
    FeatureStep feature_step{};
    Balancing balancing{ Balancing::none };

    [[nodiscard]] nlohmann::json to_json() const;
    static PreprocessConfig from_json(const nlohmann::json &j);

    friend bool operator==(const PreprocessConfig &, const PreprocessConfig &) = default;
};

/// The pipeline used whenever preprocessing is not searched: mean imputation, standardization.
[[nodiscard]] PreprocessConfig pinned_config() noexcept;

/// Preprocessing pipeline with statistics learned from training rows only.
///
/// Stages run in order: imputation of non-finite entries, per-column scaling,
/// then the single feature step.
class FittedPreprocessor {
  public:
    FittedPreprocessor() = default;

    [[nodiscard]] const PreprocessConfig &config() const noexcept { return config_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] std::size_t output_dim() const noexcept { return output_dim_; }

    /// Transforms rows of width input_dim() into rows of width output_dim().
    [[nodiscard]] Matrix apply(const Matrix &X) const;

    /// Feature index -> cluster index (agglomeration only).
    [[nodiscard]] const std::vector<std::size_t> &cluster_of() const noexcept { return cluster_of_; }
    /// Row-major principal axes, one axis per output column of width input_dim (pca only).
    [[nodiscard]] const Matrix &components() const noexcept { return components_; }
    [[nodiscard]] const std::vector<double> &explained_variance() const noexcept { return explained_variance_; }

    [[nodiscard]] nlohmann::json to_json() const;
    static FittedPreprocessor from_json(const nlohmann::json &j);

    friend FittedPreprocessor fit_preprocessor(const PreprocessConfig &cfg, const Matrix &X, std::span<const int> y);

  private:
    PreprocessConfig config_{};
    std::size_t input_dim_{ 0 };
    std::size_t output_dim_{ 0 };
    std::vector<double> fill_;     // imputation value per column
    std::vector<double> offset_;   // scaling: x' = (x - offset) / scale
    std::vector<double> scale_;
    std::vector<std::size_t> cluster_of_;
    std::size_t cluster_count_{ 0 };
    std::vector<double> pca_mean_;
    Matrix components_;
    std::vector<double> explained_variance_;
};

/// Learns every statistic from X (y is accepted for interface symmetry with learners).
[[nodiscard]] FittedPreprocessor fit_preprocessor(const PreprocessConfig &cfg, const Matrix &X, std::span<const int> y = {});

[[nodiscard]] inline Matrix apply(const FittedPreprocessor &p, const Matrix &X) { return p.apply(X); }

/// w_i = N / (C * N_{y_i}); mean weight is 1. C counts the classes present in y.
[[nodiscard]] std::vector<double> balance_weights(std::span<const int> y);

/// Sample weights implied by the config: balance_weights or all ones.
[[nodiscard]] std::vector<double> sample_weights(const PreprocessConfig &cfg, std::span<const int> y);

}  // namespace driftml::preprocess

#endif  // DRIFTML_PREPROCESS_HPP
