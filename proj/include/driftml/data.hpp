#ifndef DRIFTML_DATA_HPP
#define DRIFTML_DATA_HPP

#include "driftml/common.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace driftml::data {

struct Sample {
    std::vector<double> features;
    int label{ 0 };
    double concentration{ 0.0 };
    int batch_id{ 0 };
    std::size_t index_in_batch{ 0 };
};

/// Chronologically ordered batches T_1..T_K of one sensor array.
///
/// Samples are addressed either per batch or by a global index, which counts
/// through the batches in order.
class DriftDataset {
  public:
    DriftDataset() = default;

    /// Validates every invariant (dimension, batch ids, label range) and throws invalid_argument on failure.
    /// If class_count is zero it is inferred as the maximum observed label.
    DriftDataset(std::vector<std::vector<Sample>> batches, int class_count = 0);

    [[nodiscard]] std::size_t batch_count() const noexcept { return batches_.size(); }
    [[nodiscard]] int class_count() const noexcept { return class_count_; }
    [[nodiscard]] std::size_t feature_dim() const noexcept { return feature_dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    [[nodiscard]] const std::vector<std::size_t> &batch_sizes() const noexcept { return batch_sizes_; }

    [[nodiscard]] const std::vector<Sample> &batch(std::size_t i) const { return batches_.at(i); }
    [[nodiscard]] const std::vector<std::vector<Sample>> &batches() const noexcept { return batches_; }

    /// Global index range [first, last) of batch i (0-based).
    [[nodiscard]] std::pair<std::size_t, std::size_t> batch_range(std::size_t i) const;

    [[nodiscard]] const Sample &sample(std::size_t global_index) const;

    /// All global indices in order.
    [[nodiscard]] std::vector<std::size_t> all_indices() const;

    /// Feature rows of the selected samples, in the given order.
    [[nodiscard]] Matrix features(std::span<const std::size_t> indices) const;
    [[nodiscard]] std::vector<int> labels(std::span<const std::size_t> indices) const;

    /// The class set {1..class_count}.
    [[nodiscard]] std::vector<int> classes() const;

  private:
    std::vector<std::vector<Sample>> batches_;
    std::vector<std::size_t> batch_sizes_;
    std::vector<std::size_t> offsets_;
    int class_count_{ 0 };
    std::size_t feature_dim_{ 0 };
};

enum class SplitKind { chronological, kfold, incremental };

[[nodiscard]] std::string_view to_string(SplitKind kind) noexcept;

struct SplitPlan {
    SplitKind kind{ SplitKind::chronological };
    std::size_t k_train{ 0 };  // chronological
    std::size_t fold{ 0 };     // kfold: which fold is the test fold
    std::size_t fold_count{ 0 };
    std::uint64_t seed{ 0 };
    std::size_t step{ 0 };  // incremental: 1-based step, trains on batches 1..step
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Parses one record `<label>;<concentration> <idx>:<value> ...`.
///
/// Indices are 1-based and strictly increasing; skipped indices read as 0.
/// With `expected_dim` set, indices past it and a last index short of it are errors;
/// without it the dimension is the last index. `line_number` only decorates error messages.
[[nodiscard]] Sample parse_record(std::string_view line, std::optional<std::size_t> expected_dim = std::nullopt, std::size_t line_number = 1);

/// Reads one batch file per path, in path order. The first record fixes the feature dimension.
[[nodiscard]] DriftDataset load_batches(std::span<const std::filesystem::path> paths);

/// `dir/batch1.dat` .. `dir/batch<count>.dat`.
[[nodiscard]] std::vector<std::filesystem::path> standard_batch_paths(const std::filesystem::path &dir, std::size_t count = 10);

/// Train on batches 1..k_train, test on the rest. Requires 1 <= k_train < K.
[[nodiscard]] SplitPlan chronological_split(const DriftDataset &ds, std::size_t k_train);

/// Uniform random, unstratified partition into `folds` test folds whose sizes differ by at most one.
[[nodiscard]] std::vector<SplitPlan> kfold_split(const DriftDataset &ds, std::size_t folds, std::uint64_t seed);

/// Same as above over an arbitrary index set.
[[nodiscard]] std::vector<SplitPlan> kfold_split(std::span<const std::size_t> indices, std::size_t folds, std::uint64_t seed);

/// K-1 plans: plan i trains on batches 1..i and tests on batch i+1.
[[nodiscard]] std::vector<SplitPlan> incremental_schedule(const DriftDataset &ds);

/// First half of all samples in chronological order for training, second half for testing.
[[nodiscard]] SplitPlan chronological_fraction_split(const DriftDataset &ds, double train_fraction);

enum class SyntheticLayout { blobs, rings };

struct SyntheticSpec {
    int class_count{ 2 };
    std::size_t feature_dim{ 2 };
    std::size_t batch_count{ 2 };
    std::size_t samples_per_batch{ 100 };
    /// Translation of every class center along the drift direction, one entry per batch.
    std::vector<double> drift_magnitude;
    double noise_std{ 0.1 };
    /// Optional multiplicative sensitivity per batch (empty means 1 everywhere).
    std::vector<double> sensitivity;
    /// Distance of class centers from the origin (blobs) or ring radius step (rings).
    double center_scale{ 1.0 };
    /// Optional relative class frequencies (empty means balanced).
    std::vector<double> class_weights;
    SyntheticLayout layout{ SyntheticLayout::blobs };
};

/// Deterministic Gaussian class blobs (or concentric rings) with per-batch translation drift.
///
/// Blob centers are c_k[j] = center_scale * cos(2*pi*k/C + pi*j/d), so two classes in one
/// dimension sit at +-center_scale. Each batch draws from its own stream derived from the seed.
[[nodiscard]] DriftDataset synthesize_drift(const SyntheticSpec &spec, std::uint64_t seed);

struct MetaFeatures {
    double sample_count{ 0 };
    double feature_dim{ 0 };
    double class_count{ 0 };
    double class_imbalance_ratio{ 1.0 };
    /// mean of feature means, mean of feature stds, mean / min / max feature skewness
    std::array<double, 5> moment_summary{};
    /// log n, log d, log(n / d)
    std::array<double, 3> log_counts{};

    [[nodiscard]] std::vector<double> as_vector() const;
    static MetaFeatures from_vector(std::span<const double> values);
    static constexpr std::size_t size = 12;

    friend bool operator==(const MetaFeatures &, const MetaFeatures &) = default;
};

/// Summary statistics of the selected samples. Index order does not matter.
[[nodiscard]] MetaFeatures meta_features(const DriftDataset &ds, std::span<const std::size_t> indices);
[[nodiscard]] MetaFeatures meta_features(const Matrix &X, std::span<const int> y);

/// Per batch, per label (1..6) sample counts of the public gas sensor drift recordings.
[[nodiscard]] const std::array<std::array<std::size_t, 6>, 10> &gas_reference_counts() noexcept;
/// Per label totals; label order of the distributed files.
[[nodiscard]] const std::array<std::size_t, 6> &gas_reference_class_totals() noexcept;
inline constexpr std::size_t gas_reference_total = 13910;
inline constexpr std::size_t gas_reference_train_size = 3633;

}  // namespace driftml::data

#endif  // DRIFTML_DATA_HPP
