#ifndef DRIFTML_METRICS_HPP
#define DRIFTML_METRICS_HPP

#include "driftml/common.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace driftml::metrics {

struct ClassMetrics {
    int label{ 0 };
    double precision{ 0.0 };
    double recall{ 0.0 };
    double f1{ 0.0 };
    std::size_t support{ 0 };
};

struct Averages {
    double precision{ 0.0 };
    double recall{ 0.0 };
    double f1{ 0.0 };
};

/// One-vs-rest ROC curve of a single class.
struct RocCurve {
    int label{ 0 };
    bool present{ false };  // false when the class has no positives or no negatives; auc is then meaningless
    std::vector<double> fpr;
    std::vector<double> tpr;
    std::vector<double> thresholds;  // score at which each point after the origin is reached
    double auc{ 0.0 };
};

struct RocReport {
    std::vector<RocCurve> per_class;
    double macro_auc{ 0.0 };       // mean over present classes
    std::size_t scored_classes{ 0 };
};

struct EvalReport {
    std::vector<int> classes;
    std::vector<std::vector<std::size_t>> confusion;  // rows = true class, cols = predicted class
    std::vector<ClassMetrics> per_class;
    Averages macro;
    Averages weighted;
    double accuracy{ 0.0 };
    std::size_t sample_count{ 0 };
    std::optional<RocReport> roc;

    [[nodiscard]] nlohmann::json to_json() const;
    /// One row per class, then the macro, weighted and accuracy rows.
    [[nodiscard]] std::string to_csv() const;
};

/// Confusion matrix and per-class/averaged scores. Undefined ratios are 0.
///
/// `classes` defaults to the sorted union of labels in y_true and y_pred.
[[nodiscard]] EvalReport evaluate(std::span<const int> y_true, std::span<const int> y_pred, std::span<const int> classes = {});

/// Macro F1 without building a full report.
[[nodiscard]] double macro_f1(std::span<const int> y_true, std::span<const int> y_pred);

/// Per-class one-vs-rest ROC; columns of `proba` follow `classes`.
/// AUC is the trapezoid area, which equals the Mann-Whitney statistic with ties counted 0.5.
[[nodiscard]] RocReport roc_auc_ovr(std::span<const int> y_true, const Matrix &proba, std::span<const int> classes);

/// Binary AUC of scores against 0/1 labels. Requires both labels present.
[[nodiscard]] double binary_auc(std::span<const double> scores, std::span<const int> positive);

struct RunAggregate {
    std::vector<double> scores;
    double mean{ 0.0 };
    double std{ 0.0 };         // population
    double sample_std{ 0.0 };  // n - 1 denominator; 0 for a single run
    double min{ 0.0 };
    double max{ 0.0 };
    std::size_t count{ 0 };

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] RunAggregate aggregate_runs(std::span<const double> scores);

/// Spearman rank correlation (average ranks for ties). 0 when either side is constant.
[[nodiscard]] double spearman_rho(std::span<const double> x, std::span<const double> y);

struct GridBounds {
    double x_low{ 0.0 };
    double x_high{ 1.0 };
    double y_low{ 0.0 };
    double y_high{ 1.0 };
};

/// Labels predicted over a 2-D slice of feature space.
struct DecisionGrid {
    std::size_t feature_x{ 0 };
    std::size_t feature_y{ 1 };
    std::vector<double> x;
    std::vector<double> y;
    std::vector<int> labels;  // row-major: labels[iy * x.size() + ix]

    [[nodiscard]] int at(std::size_t ix, std::size_t iy) const { return labels[iy * x.size() + ix]; }
    /// Long format: x,y,label.
    [[nodiscard]] std::string to_csv() const;
};

using Predictor = std::function<std::vector<int>(const Matrix &)>;

/// Evaluates `predict` on a resolution x resolution grid over features (fx, fy);
/// every other feature is held at `base_point` (typically the training means).
[[nodiscard]] DecisionGrid decision_grid(const Predictor &predict, std::span<const double> base_point, std::size_t fx, std::size_t fy, const GridBounds &bounds, std::size_t resolution);

}  // namespace driftml::metrics

#endif  // DRIFTML_METRICS_HPP
