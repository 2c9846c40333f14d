#include "driftml/data.hpp"
#include "driftml/learners.hpp"
#include "driftml/metrics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

using namespace driftml;
using namespace driftml::data;

namespace {

std::filesystem::path write_temp(const std::string &name, const std::string &contents) {
    const auto dir = std::filesystem::temp_directory_path() / "driftml_data_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream{ path } << contents;
    return path;
}

DriftDataset small_drift(std::size_t batches, std::size_t per_batch, std::uint64_t seed = 1) {
    SyntheticSpec s;
    s.class_count = 3;
    s.feature_dim = 4;
    s.batch_count = batches;
    s.samples_per_batch = per_batch;
    s.drift_magnitude.assign(batches, 0.0);
    s.noise_std = 0.3;
    return synthesize_drift(s, seed);
}

}  // namespace

TEST(ParseRecord, ReadsLabelConcentrationAndFeatures) {
    const Sample s = parse_record("3;50.0 1:1.5 2:-0.25", 2);
    EXPECT_EQ(s.label, 3);
    EXPECT_DOUBLE_EQ(s.concentration, 50.0);
    ASSERT_EQ(s.features.size(), 2u);
    EXPECT_DOUBLE_EQ(s.features[0], 1.5);
    EXPECT_DOUBLE_EQ(s.features[1], -0.25);
}

TEST(ParseRecord, RejectsMalformedInput) {
    EXPECT_THROW((void)parse_record("x;1 1:2"), parse_error);
    EXPECT_THROW((void)parse_record("1;1 2:1 1:2"), parse_error);
    EXPECT_THROW((void)parse_record("1;abc 1:2"), parse_error);
    EXPECT_THROW((void)parse_record("1;1 1:zz"), parse_error);
    EXPECT_THROW((void)parse_record("1;1 1:1", 3), parse_error);
}

TEST(ParseRecord, ErrorNamesLineAndColumn) {
    try {
        (void)parse_record("1;1 1:2 2:bad", std::nullopt, 7);
        FAIL() << "expected a parse error";
    } catch (const parse_error &e) {
        EXPECT_EQ(e.line(), 7u);
        EXPECT_GT(e.column(), 1u);
    }
}

TEST(LoadBatches, TwoTinyFiles) {
    const auto a = write_temp("a.dat", "1;10 1:0.5 2:1.0\n2;20 1:1.5 2:2.0\n");
    const auto b = write_temp("b.dat", "2;5 1:3.0 2:4.0\n1;7 1:5.0 2:6.0\n");
    const std::vector<std::filesystem::path> paths{ a, b };
    const auto ds = load_batches(paths);
    EXPECT_EQ(ds.batch_count(), 2u);
    EXPECT_EQ(ds.batch_sizes(), (std::vector<std::size_t>{ 2, 2 }));
    EXPECT_EQ(ds.feature_dim(), 2u);
    EXPECT_EQ(ds.class_count(), 2);
    // order preserving: concatenation reproduces file order
    const auto X = ds.features(ds.all_indices());
    EXPECT_EQ(X.data(), (std::vector<double>{ 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0 }));
    EXPECT_EQ(ds.sample(2).batch_id, 2);
    EXPECT_EQ(ds.sample(3).index_in_batch, 1u);
    EXPECT_DOUBLE_EQ(ds.sample(3).concentration, 7.0);
}

TEST(LoadBatches, RejectsEmptyAndInconsistentFiles) {
    const auto ok = write_temp("ok.dat", "1;1 1:1 2:2\n");
    const auto empty = write_temp("empty.dat", "");
    const auto wide = write_temp("wide.dat", "1;1 1:1 2:2 3:3\n");
    EXPECT_ANY_THROW((void)load_batches(std::vector<std::filesystem::path>{ ok, empty }));
    EXPECT_ANY_THROW((void)load_batches(std::vector<std::filesystem::path>{ ok, wide }));
}

TEST(ChronologicalSplit, ToyAndPrecondition) {
    const auto ds = small_drift(2, 10);
    const auto plan = chronological_split(ds, 1);
    EXPECT_EQ(plan.train_indices.size(), 10u);
    EXPECT_EQ(plan.test_indices.size(), 10u);
    for (const auto i : plan.train_indices) EXPECT_EQ(ds.sample(i).batch_id, 1);
    for (const auto i : plan.test_indices) EXPECT_EQ(ds.sample(i).batch_id, 2);
    EXPECT_THROW((void)chronological_split(ds, 2), invalid_argument);
    EXPECT_THROW((void)chronological_split(ds, 0), invalid_argument);
}

TEST(KFoldSplit, EqualFoldsAndDeterminism) {
    const auto ds = small_drift(2, 5);
    const auto plans = kfold_split(ds, 5, 42);
    ASSERT_EQ(plans.size(), 5u);
    for (const auto &p : plans) EXPECT_EQ(p.test_indices.size(), 2u);
    const auto again = kfold_split(ds, 5, 42);
    for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(plans[f].test_indices, again[f].test_indices);
    EXPECT_ANY_THROW((void)kfold_split(ds, 1, 0));
    EXPECT_ANY_THROW((void)kfold_split(ds, 11, 0));
}

TEST(KFoldSplit, FoldSizesFollowIntegerDivision) {
    const std::size_t n = 10277;
    const std::size_t folds = 10;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const auto plans = kfold_split(idx, folds, 9);
    const std::size_t q = n / folds;
    const std::size_t extra = n % folds;
    std::size_t big = 0;
    for (const auto &p : plans) {
        EXPECT_TRUE(p.test_indices.size() == q || p.test_indices.size() == q + 1);
        big += p.test_indices.size() == q + 1;
    }
    EXPECT_EQ(big, extra);
    EXPECT_EQ(q, 1027u);
    EXPECT_EQ(extra, 7u);
}

TEST(IncrementalSchedule, LengthAndDegenerateCase) {
    const auto ds = small_drift(10, 6);
    const auto plans = incremental_schedule(ds);
    ASSERT_EQ(plans.size(), 9u);
    const auto &last = plans.back();
    std::set<int> train_batches;
    for (const auto i : last.train_indices) train_batches.insert(ds.sample(i).batch_id);
    EXPECT_EQ(train_batches, (std::set<int>{ 1, 2, 3, 4, 5, 6, 7, 8, 9 }));
    for (const auto i : last.test_indices) EXPECT_EQ(ds.sample(i).batch_id, 10);

    const auto two = small_drift(2, 6);
    const auto single = incremental_schedule(two);
    ASSERT_EQ(single.size(), 1u);
    const auto chrono = chronological_split(two, 1);
    EXPECT_EQ(single[0].train_indices, chrono.train_indices);
    EXPECT_EQ(single[0].test_indices, chrono.test_indices);
    EXPECT_THROW((void)incremental_schedule(small_drift(1, 6)), invalid_argument);
}

TEST(SplitProperties, RandomizedPlansKeepInvariants) {
    std::mt19937_64 rng{ 5 };
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t K = 2 + rng() % 6;
        const auto ds = small_drift(K, 1 + rng() % 9, rng());
        const std::size_t k = 1 + rng() % (K - 1);
        const auto plan = chronological_split(ds, k);
        int max_train = 0;
        int min_test = 1 << 30;
        for (const auto i : plan.train_indices) max_train = std::max(max_train, ds.sample(i).batch_id);
        for (const auto i : plan.test_indices) min_test = std::min(min_test, ds.sample(i).batch_id);
        EXPECT_LT(max_train, min_test);
        EXPECT_EQ(plan.train_indices.size() + plan.test_indices.size(), ds.size());

        const std::size_t folds = 2 + rng() % std::min<std::size_t>(ds.size() - 1, 8);
        std::vector<int> seen(ds.size(), 0);
        for (const auto &p : kfold_split(ds, folds, rng())) {
            for (const auto i : p.test_indices) ++seen[i];
            std::set<std::size_t> train(p.train_indices.begin(), p.train_indices.end());
            for (const auto i : p.test_indices) EXPECT_FALSE(train.contains(i));
        }
        for (const int s : seen) EXPECT_EQ(s, 1);
    }
}

TEST(SynthesizeDrift, NoiseFreeTwoClassLine) {
    SyntheticSpec s;
    s.class_count = 2;
    s.feature_dim = 1;
    s.batch_count = 1;
    s.samples_per_batch = 20;
    s.drift_magnitude = { 0.0 };
    s.noise_std = 0.0;
    const auto ds = synthesize_drift(s, 3);
    for (const auto &sample : ds.batch(0)) {
        EXPECT_DOUBLE_EQ(std::abs(sample.features[0]), 1.0);
        EXPECT_DOUBLE_EQ(sample.features[0], sample.label == 1 ? 1.0 : -1.0);
    }
}

TEST(SynthesizeDrift, BitwiseReproducible) {
    SyntheticSpec s;
    s.class_count = 4;
    s.feature_dim = 5;
    s.batch_count = 3;
    s.samples_per_batch = 40;
    s.drift_magnitude = { 0.0, 0.3, 0.9 };
    s.sensitivity = { 1.0, 0.9, 0.8 };
    const auto a = synthesize_drift(s, 77);
    const auto b = synthesize_drift(s, 77);
    EXPECT_EQ(a.features(a.all_indices()).data(), b.features(b.all_indices()).data());
    EXPECT_EQ(a.labels(a.all_indices()), b.labels(b.all_indices()));
}

TEST(SynthesizeDrift, ZeroDriftBatchesShareTheDistribution) {
    SyntheticSpec s;
    s.class_count = 2;
    s.feature_dim = 3;
    s.batch_count = 4;
    s.samples_per_batch = 2000;
    s.drift_magnitude.assign(4, 0.0);
    s.noise_std = 0.5;
    const auto ds = synthesize_drift(s, 11);
    // per-batch means of each feature agree within five standard errors
    const double se = 0.5 / std::sqrt(1000.0) + 1.0 / std::sqrt(2000.0);
    std::vector<std::vector<double>> means(4, std::vector<double>(3, 0.0));
    for (std::size_t b = 0; b < 4; ++b) {
        for (const auto &sample : ds.batch(b))
            for (std::size_t j = 0; j < 3; ++j) means[b][j] += sample.features[j] / 2000.0;
    }
    for (std::size_t b = 1; b < 4; ++b)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(means[b][j], means[0][j], 5 * se);
}

TEST(SynthesizeDrift, MonotoneDriftDegradesAFixedModel) {
    SyntheticSpec s;
    s.class_count = 3;
    s.feature_dim = 4;
    s.batch_count = 6;
    s.samples_per_batch = 150;
    s.drift_magnitude = { 0.0, 0.5, 1.0, 1.5, 2.0, 2.5 };
    s.noise_std = 0.4;
    const auto ds = synthesize_drift(s, 21);
    const auto [b0, b1] = ds.batch_range(0);
    std::vector<std::size_t> train(b1 - b0);
    std::iota(train.begin(), train.end(), b0);
    const auto model = learners::train(learners::AlgorithmId::knn, {}, ds.features(train), ds.labels(train), {}, 1);
    std::vector<double> batch_index;
    std::vector<double> accuracy;
    for (std::size_t b = 0; b < ds.batch_count(); ++b) {
        const auto [lo, hi] = ds.batch_range(b);
        std::vector<std::size_t> idx(hi - lo);
        std::iota(idx.begin(), idx.end(), lo);
        accuracy.push_back(metrics::evaluate(ds.labels(idx), model.predict(ds.features(idx))).accuracy);
        batch_index.push_back(static_cast<double>(b + 1));
    }
    EXPECT_LE(metrics::spearman_rho(batch_index, accuracy), 0.0);
}

TEST(MetaFeatures, ImbalanceRatioAndPermutationInvariance) {
    Matrix X4(4, 2);
    for (std::size_t i = 0; i < 4; ++i) X4(i, 0) = X4(i, 1) = static_cast<double>(i);
    EXPECT_DOUBLE_EQ(meta_features(X4, std::vector<int>{ 1, 1, 2, 2 }).class_imbalance_ratio, 1.0);

    Matrix X10(10, 1);
    std::vector<int> y10(10, 1);
    y10[9] = 2;
    EXPECT_DOUBLE_EQ(meta_features(X10, y10).class_imbalance_ratio, 9.0);

    const auto ds = small_drift(3, 30);
    auto idx = ds.all_indices();
    const auto a = meta_features(ds, idx);
    std::mt19937_64 rng{ 3 };
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto b = meta_features(ds, idx);
    const auto va = a.as_vector();
    const auto vb = b.as_vector();
    for (std::size_t k = 0; k < va.size(); ++k) {
        EXPECT_NEAR(va[k], vb[k], 1e-12 * std::max(1.0, std::abs(va[k])));
        EXPECT_TRUE(std::isfinite(va[k]));
    }
    EXPECT_DOUBLE_EQ(a.sample_count, 90.0);
    EXPECT_ANY_THROW((void)meta_features(ds, std::vector<std::size_t>{}));
}

TEST(GasReference, TablesAreInternallyConsistent) {
    const auto &counts = gas_reference_counts();
    std::size_t total = 0;
    std::size_t first_five = 0;
    std::array<std::size_t, 6> columns{};
    for (std::size_t b = 0; b < counts.size(); ++b) {
        for (std::size_t c = 0; c < 6; ++c) {
            total += counts[b][c];
            columns[c] += counts[b][c];
            if (b < 5) first_five += counts[b][c];
        }
    }
    EXPECT_EQ(total, 13910u);
    EXPECT_EQ(total, gas_reference_total);
    EXPECT_EQ(first_five, 3633u);
    EXPECT_EQ(first_five, gas_reference_train_size);
    EXPECT_EQ(columns, gas_reference_class_totals());
    EXPECT_EQ(gas_reference_class_totals(), (std::array<std::size_t, 6>{ 2565, 2926, 1641, 1936, 3009, 1833 }));
    EXPECT_EQ(std::accumulate(counts[9].begin(), counts[9].end(), std::size_t{ 0 }), 3600u);
}
