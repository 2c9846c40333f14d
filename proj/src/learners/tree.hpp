#ifndef DRIFTML_SRC_LEARNERS_TREE_HPP
#define DRIFTML_SRC_LEARNERS_TREE_HPP

#include "driftml/common.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace driftml::learners::detail {

/// Column-major bin codes of a training matrix.
///
/// Features with at most `max_bins` distinct values get one bin per value, so splits
/// are exact; otherwise bins are quantiles of the distinct values.
class BinnedMatrix {
  public:
    static BinnedMatrix build(const Matrix &X, std::size_t max_bins = 255);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] const std::uint8_t *column(std::size_t f) const noexcept { return codes_.data() + f * rows_; }
    [[nodiscard]] std::size_t bin_count(std::size_t f) const noexcept { return bin_min_[f].size(); }
    [[nodiscard]] double bin_min(std::size_t f, std::size_t b) const noexcept { return bin_min_[f][b]; }
    [[nodiscard]] double bin_max(std::size_t f, std::size_t b) const noexcept { return bin_max_[f][b]; }

  private:
    std::size_t rows_{ 0 };
    std::size_t cols_{ 0 };
    std::vector<std::uint8_t> codes_;
    std::vector<std::vector<double>> bin_min_;
    std::vector<std::vector<double>> bin_max_;
};

struct TreeNode {
    std::int32_t feature{ -1 };  // -1 marks a leaf
    double threshold{ 0.0 };     // go left iff !(x > threshold)
    std::int32_t left{ -1 };
    std::int32_t right{ -1 };
    std::uint32_t value_offset{ 0 };
};

/// Binary decision tree; each leaf stores `value_width` doubles.
class Tree {
  public:
    Tree() = default;
    Tree(std::vector<TreeNode> nodes, std::vector<double> values, std::size_t value_width) :
        nodes_{ std::move(nodes) },
        values_{ std::move(values) },
        value_width_{ value_width } {}

    [[nodiscard]] std::span<const double> leaf(std::span<const double> x) const noexcept;
    [[nodiscard]] std::size_t value_width() const noexcept { return value_width_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t depth() const noexcept;
    [[nodiscard]] const std::vector<TreeNode> &nodes() const noexcept { return nodes_; }

    [[nodiscard]] nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json &j);

  private:
    std::vector<TreeNode> nodes_;
    std::vector<double> values_;
    std::size_t value_width_{ 0 };
};

enum class Criterion { gini, entropy };

struct TreeParams {
    std::size_t max_depth{ 0 };  // 0 = unlimited
    std::size_t min_samples_split{ 2 };
    std::size_t min_samples_leaf{ 1 };
    std::size_t max_features{ 0 };  // 0 = all
    Criterion criterion{ Criterion::gini };
    double l2{ 0.0 };                // regression leaves: -G / (H + l2)
    bool random_thresholds{ false };  // threshold uniform between the neighbouring values instead of the midpoint
};

/// CART classification tree on rows with positive weight; leaves hold class distributions.
[[nodiscard]] Tree build_classification_tree(const BinnedMatrix &X, std::span<const int> y, std::size_t n_classes, std::span<const double> weights, std::span<const std::size_t> rows, const TreeParams &params, rng_type &rng, const Deadline &deadline);

/// Second-order regression tree on gradients/hessians (XGBoost-style gain).
/// Leaves hold { -G / (H + l2), within-leaf variance of -g }.
[[nodiscard]] Tree build_regression_tree(const BinnedMatrix &X, std::span<const double> grad, std::span<const double> hess, std::span<const std::size_t> rows, const TreeParams &params, rng_type &rng, const Deadline &deadline);

/// Number of features to draw per node for a named rule ("sqrt", "log2", "half", "all").
[[nodiscard]] std::size_t feature_budget(std::string_view rule, std::size_t feature_count);

}  // namespace driftml::learners::detail

#endif  // DRIFTML_SRC_LEARNERS_TREE_HPP
