#include "driftml/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace driftml::data {

DriftDataset::DriftDataset(std::vector<std::vector<Sample>> batches, int class_count) :
    batches_{ std::move(batches) },
    class_count_{ class_count } {
    offsets_.push_back(0);
    int max_label = 0;
    bool dim_known = false;
    for (std::size_t b = 0; b < batches_.size(); ++b) {
        for (std::size_t j = 0; j < batches_[b].size(); ++j) {
            const Sample &s = batches_[b][j];
            if (s.batch_id != static_cast<int>(b) + 1) {
                throw invalid_argument("sample " + std::to_string(j) + " of batch " + std::to_string(b + 1) + " carries batch_id " + std::to_string(s.batch_id));
            }
            if (!dim_known) {
                feature_dim_ = s.features.size();
                dim_known = true;
            } else if (s.features.size() != feature_dim_) {
                throw invalid_argument("sample " + std::to_string(j) + " of batch " + std::to_string(b + 1) + " has " + std::to_string(s.features.size()) + " features, expected " + std::to_string(feature_dim_));
            }
            if (s.label < 1) {
                throw invalid_argument("label " + std::to_string(s.label) + " outside the class set");
            }
            max_label = std::max(max_label, s.label);
        }
        batch_sizes_.push_back(batches_[b].size());
        offsets_.push_back(offsets_.back() + batches_[b].size());
    }
    if (class_count_ == 0) {
        class_count_ = max_label;
    } else if (max_label > class_count_) {
        throw invalid_argument("label " + std::to_string(max_label) + " exceeds declared class count " + std::to_string(class_count_));
    }
}

std::pair<std::size_t, std::size_t> DriftDataset::batch_range(std::size_t i) const {
    if (i >= batches_.size()) {
        throw invalid_argument("batch " + std::to_string(i) + " out of range");
    }
    return { offsets_[i], offsets_[i + 1] };
}

const Sample &DriftDataset::sample(std::size_t global_index) const {
    if (global_index >= size()) {
        throw invalid_argument("sample index " + std::to_string(global_index) + " out of range");
    }
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global_index);
    const auto b = static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
    return batches_[b][global_index - offsets_[b]];
}

std::vector<std::size_t> DriftDataset::all_indices() const {
    std::vector<std::size_t> out(size());
    std::iota(out.begin(), out.end(), std::size_t{ 0 });
    return out;
}

Matrix DriftDataset::features(std::span<const std::size_t> indices) const {
    Matrix X(indices.size(), feature_dim_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto &f = sample(indices[i]).features;
        std::copy(f.begin(), f.end(), X.row(i).begin());
    }
    return X;
}

std::vector<int> DriftDataset::labels(std::span<const std::size_t> indices) const {
    std::vector<int> y(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        y[i] = sample(indices[i]).label;
    }
    return y;
}

std::vector<int> DriftDataset::classes() const {
    std::vector<int> out(static_cast<std::size_t>(class_count_));
    std::iota(out.begin(), out.end(), 1);
    return out;
}

std::string_view to_string(SplitKind kind) noexcept {
    switch (kind) {
        case SplitKind::chronological:
            return "chronological";
        case SplitKind::kfold:
            return "kfold";
        case SplitKind::incremental:
            return "incremental";
    }
    return "unknown";
}

namespace {

bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

template <typename T>
T parse_number(std::string_view token, std::size_t line, std::size_t column, const char *what) {
    T value{};
    const auto *first = token.data();
    const auto *last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || token.empty()) {
        throw parse_error(std::string{ what } + " '" + std::string{ token } + "' is not a valid number", line, column);
    }
    return value;
}

}  // namespace

Sample parse_record(std::string_view line, std::optional<std::size_t> expected_dim, std::size_t line_number) {
    std::size_t pos = 0;
    const auto next_token = [&]() -> std::pair<std::string_view, std::size_t> {
        while (pos < line.size() && is_space(line[pos])) {
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < line.size() && !is_space(line[pos])) {
            ++pos;
        }
        return { line.substr(start, pos - start), start + 1 };
    };

    const auto [head, head_col] = next_token();
    if (head.empty()) {
        throw parse_error("empty record", line_number, 1);
    }
    const auto semicolon = head.find(';');
    if (semicolon == std::string_view::npos) {
        throw parse_error("expected '<label>;<concentration>'", line_number, head_col);
    }
    Sample s;
    s.label = parse_number<int>(head.substr(0, semicolon), line_number, head_col, "label");
    s.concentration = parse_number<double>(head.substr(semicolon + 1), line_number, head_col + semicolon + 1, "concentration");
    if (s.concentration < 0.0 || !std::isfinite(s.concentration)) {
        throw parse_error("concentration must be finite and non-negative", line_number, head_col + semicolon + 1);
    }

    std::size_t last_index = 0;
    while (true) {
        const auto [token, col] = next_token();
        if (token.empty()) {
            break;
        }
        const auto colon = token.find(':');
        if (colon == std::string_view::npos) {
            throw parse_error("expected '<index>:<value>', got '" + std::string{ token } + "'", line_number, col);
        }
        const auto index = parse_number<std::size_t>(token.substr(0, colon), line_number, col, "feature index");
        if (index <= last_index) {
            throw parse_error("feature index " + std::to_string(index) + " does not increase past " + std::to_string(last_index), line_number, col);
        }
        if (expected_dim && index > *expected_dim) {
            throw parse_error("feature index " + std::to_string(index) + " exceeds dimension " + std::to_string(*expected_dim), line_number, col);
        }
        const auto value = parse_number<double>(token.substr(colon + 1), line_number, col + colon + 1, "feature value");
        s.features.resize(index, 0.0);
        s.features[index - 1] = value;
        last_index = index;
    }
    if (expected_dim && last_index != *expected_dim) {
        throw parse_error("record ends at feature " + std::to_string(last_index) + ", dimension is " + std::to_string(*expected_dim), line_number, line.size() + 1);
    }
    if (last_index == 0) {
        throw parse_error("record has no features", line_number, line.size() + 1);
    }
    return s;
}

DriftDataset load_batches(std::span<const std::filesystem::path> paths) {
    std::vector<std::vector<Sample>> batches;
    std::optional<std::size_t> dim;
    for (std::size_t b = 0; b < paths.size(); ++b) {
        std::ifstream in{ paths[b] };
        if (!in) {
            throw error("cannot open batch file " + paths[b].string());
        }
        std::vector<Sample> batch;
        std::string line;
        std::size_t line_number = 0;
        while (std::getline(in, line)) {
            ++line_number;
            if (std::all_of(line.begin(), line.end(), is_space)) {
                continue;
            }
            try {
                Sample s = parse_record(line, dim, line_number);
                if (!dim) {
                    dim = s.features.size();
                }
                s.batch_id = static_cast<int>(b) + 1;
                s.index_in_batch = batch.size();
                batch.push_back(std::move(s));
            } catch (const parse_error &e) {
                throw parse_error(paths[b].string() + ": " + e.what(), e.line(), e.column());
            }
        }
        if (batch.empty()) {
            throw error("batch file " + paths[b].string() + " contains no records");
        }
        batches.push_back(std::move(batch));
    }
    return DriftDataset{ std::move(batches) };
}

std::vector<std::filesystem::path> standard_batch_paths(const std::filesystem::path &dir, std::size_t count) {
    std::vector<std::filesystem::path> out;
    for (std::size_t i = 1; i <= count; ++i) {
        out.push_back(dir / ("batch" + std::to_string(i) + ".dat"));
    }
    return out;
}

SplitPlan chronological_split(const DriftDataset &ds, std::size_t k_train) {
    if (k_train < 1 || k_train >= ds.batch_count()) {
        throw invalid_argument("k_train " + std::to_string(k_train) + " must lie in [1, " + std::to_string(ds.batch_count()) + ")");
    }
    SplitPlan plan;
    plan.kind = SplitKind::chronological;
    plan.k_train = k_train;
    const std::size_t boundary = ds.batch_range(k_train - 1).second;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        (i < boundary ? plan.train_indices : plan.test_indices).push_back(i);
    }
    return plan;
}

std::vector<SplitPlan> kfold_split(std::span<const std::size_t> indices, std::size_t folds, std::uint64_t seed) {
    if (folds < 2 || folds > indices.size()) {
        throw invalid_argument("fold count " + std::to_string(folds) + " must lie in [2, " + std::to_string(indices.size()) + "]");
    }
    std::vector<std::size_t> order(indices.begin(), indices.end());
    rng_type rng{ seed };
    shuffle(order, rng);

    // The first (n mod folds) folds get one extra sample.
    const std::size_t base = order.size() / folds;
    const std::size_t extra = order.size() % folds;
    std::vector<std::size_t> fold_of(order.size());
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t k = 0; k < len; ++k) {
            fold_of[pos++] = f;
        }
    }

    std::vector<SplitPlan> plans(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        plans[f].kind = SplitKind::kfold;
        plans[f].fold = f;
        plans[f].fold_count = folds;
        plans[f].seed = seed;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t f = 0; f < folds; ++f) {
            (fold_of[i] == f ? plans[f].test_indices : plans[f].train_indices).push_back(order[i]);
        }
    }
    for (auto &p : plans) {
        std::sort(p.train_indices.begin(), p.train_indices.end());
        std::sort(p.test_indices.begin(), p.test_indices.end());
    }
    return plans;
}

std::vector<SplitPlan> kfold_split(const DriftDataset &ds, std::size_t folds, std::uint64_t seed) {
    const auto all = ds.all_indices();
    return kfold_split(all, folds, seed);
}

std::vector<SplitPlan> incremental_schedule(const DriftDataset &ds) {
    if (ds.batch_count() < 2) {
        throw invalid_argument("incremental schedule needs at least two batches");
    }
    std::vector<SplitPlan> plans;
    for (std::size_t step = 1; step < ds.batch_count(); ++step) {
        SplitPlan plan;
        plan.kind = SplitKind::incremental;
        plan.step = step;
        plan.k_train = step;
        const auto [test_first, test_last] = ds.batch_range(step);
        for (std::size_t i = 0; i < test_first; ++i) {
            plan.train_indices.push_back(i);
        }
        for (std::size_t i = test_first; i < test_last; ++i) {
            plan.test_indices.push_back(i);
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

SplitPlan chronological_fraction_split(const DriftDataset &ds, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw invalid_argument("train fraction must lie in (0, 1)");
    }
    const auto boundary = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ds.size())));
    if (boundary == 0 || boundary >= ds.size()) {
        throw invalid_argument("train fraction leaves an empty side");
    }
    SplitPlan plan;
    plan.kind = SplitKind::chronological;
    plan.k_train = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        (i < boundary ? plan.train_indices : plan.test_indices).push_back(i);
    }
    return plan;
}

DriftDataset synthesize_drift(const SyntheticSpec &spec, std::uint64_t seed) {
    if (spec.class_count < 1 || spec.feature_dim < 1 || spec.batch_count < 1 || spec.samples_per_batch < 1) {
        throw invalid_argument("synthetic spec counts must all be at least 1");
    }
    if (spec.drift_magnitude.size() != spec.batch_count) {
        throw invalid_argument("drift_magnitude needs one entry per batch");
    }
    if (!spec.sensitivity.empty() && spec.sensitivity.size() != spec.batch_count) {
        throw invalid_argument("sensitivity needs one entry per batch");
    }
    if (!spec.class_weights.empty() && spec.class_weights.size() != static_cast<std::size_t>(spec.class_count)) {
        throw invalid_argument("class_weights needs one entry per class");
    }
    if (spec.noise_std < 0.0) {
        throw invalid_argument("noise_std must be non-negative");
    }

    const auto C = static_cast<std::size_t>(spec.class_count);
    const std::size_t d = spec.feature_dim;

    std::vector<std::vector<double>> centers(C, std::vector<double>(d));
    for (std::size_t k = 0; k < C; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            centers[k][j] = spec.center_scale * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(C) + std::numbers::pi * static_cast<double>(j) / static_cast<double>(d));
        }
    }

    std::vector<double> direction(d);
    {
        rng_type rng{ mix_seed(seed, 0xd1f7) };
        double norm = 0.0;
        for (auto &v : direction) {
            v = standard_normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto &v : direction) {
            v /= norm;
        }
    }

    // Inverse-CDF class draw for weighted frequencies; round robin when balanced.
    std::vector<double> cumulative;
    if (!spec.class_weights.empty()) {
        double total = 0.0;
        for (const double w : spec.class_weights) {
            if (w < 0.0) {
                throw invalid_argument("class weights must be non-negative");
            }
            total += w;
            cumulative.push_back(total);
        }
        if (total <= 0.0) {
            throw invalid_argument("class weights must not all be zero");
        }
        for (auto &c : cumulative) {
            c /= total;
        }
    }

    std::vector<std::vector<Sample>> batches(spec.batch_count);
    for (std::size_t b = 0; b < spec.batch_count; ++b) {
        rng_type rng{ mix_seed(seed, b + 1) };
        const double shift = spec.drift_magnitude[b];
        const double gain = spec.sensitivity.empty() ? 1.0 : spec.sensitivity[b];
        for (std::size_t j = 0; j < spec.samples_per_batch; ++j) {
            std::size_t k = j % C;
            if (!cumulative.empty()) {
                const double u = uniform01(rng);
                k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                k = std::min(k, C - 1);
            }
            Sample s;
            s.label = static_cast<int>(k) + 1;
            s.batch_id = static_cast<int>(b) + 1;
            s.index_in_batch = j;
            s.features.resize(d);
            if (spec.layout == SyntheticLayout::blobs) {
                for (std::size_t f = 0; f < d; ++f) {
                    const double noise = spec.noise_std > 0.0 ? spec.noise_std * standard_normal(rng) : 0.0;
                    s.features[f] = gain * (centers[k][f] + shift * direction[f] + noise);
                }
            } else {
                // Class k lives on the sphere of radius (k + 1) * center_scale in the first two dims.
                const double radius = static_cast<double>(k + 1) * spec.center_scale;
                const double angle = 2.0 * std::numbers::pi * uniform01(rng);
                for (std::size_t f = 0; f < d; ++f) {
                    double base = 0.0;
                    if (f == 0) {
                        base = radius * std::cos(angle);
                    } else if (f == 1) {
                        base = radius * std::sin(angle);
                    }
                    const double noise = spec.noise_std > 0.0 ? spec.noise_std * standard_normal(rng) : 0.0;
                    s.features[f] = gain * (base + shift * direction[f] + noise);
                }
            }
            batches[b].push_back(std::move(s));
        }
    }
    return DriftDataset{ std::move(batches), spec.class_count };
}

std::vector<double> MetaFeatures::as_vector() const {
    std::vector<double> v{ sample_count, feature_dim, class_count, class_imbalance_ratio };
    v.insert(v.end(), moment_summary.begin(), moment_summary.end());
    v.insert(v.end(), log_counts.begin(), log_counts.end());
    return v;
}

MetaFeatures MetaFeatures::from_vector(std::span<const double> values) {
    if (values.size() != size) {
        throw invalid_argument("meta-feature vector needs " + std::to_string(size) + " entries");
    }
    MetaFeatures m;
    m.sample_count = values[0];
    m.feature_dim = values[1];
    m.class_count = values[2];
    m.class_imbalance_ratio = values[3];
    std::copy(values.begin() + 4, values.begin() + 9, m.moment_summary.begin());
    std::copy(values.begin() + 9, values.end(), m.log_counts.begin());
    return m;
}

MetaFeatures meta_features(const Matrix &X, std::span<const int> y) {
    if (X.rows() == 0 || X.rows() != y.size()) {
        throw invalid_argument("meta-features need a non-empty sample set with one label per row");
    }
    const auto n = static_cast<double>(X.rows());
    const std::size_t d = X.cols();

    MetaFeatures m;
    m.sample_count = n;
    m.feature_dim = static_cast<double>(d);

    const auto classes = unique_labels(y);
    m.class_count = static_cast<double>(classes.size());
    std::vector<std::size_t> counts(classes.size(), 0);
    for (const int label : y) {
        ++counts[static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin())];
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    m.class_imbalance_ratio = static_cast<double>(*hi) / static_cast<double>(*lo);

    double mean_of_means = 0.0;
    double mean_of_stds = 0.0;
    double skew_sum = 0.0;
    double skew_min = std::numeric_limits<double>::infinity();
    double skew_max = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < d; ++f) {
        double mean = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            mean += X(i, f);
        }
        mean /= n;
        double m2 = 0.0;
        double m3 = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const double c = X(i, f) - mean;
            m2 += c * c;
            m3 += c * c * c;
        }
        m2 /= n;
        m3 /= n;
        const double sd = std::sqrt(m2);
        const double skew = sd > 1e-12 ? m3 / (sd * sd * sd) : 0.0;
        mean_of_means += mean;
        mean_of_stds += sd;
        skew_sum += skew;
        skew_min = std::min(skew_min, skew);
        skew_max = std::max(skew_max, skew);
    }
    const auto dd = static_cast<double>(d);
    m.moment_summary = { mean_of_means / dd, mean_of_stds / dd, skew_sum / dd, skew_min, skew_max };
    m.log_counts = { std::log(n), std::log(dd), std::log(n / dd) };

    for (const double v : m.as_vector()) {
        if (!std::isfinite(v)) {
            throw invalid_argument("meta-features are not finite; the selection contains non-finite values");
        }
    }
    return m;
}

MetaFeatures meta_features(const DriftDataset &ds, std::span<const std::size_t> indices) {
    if (indices.empty()) {
        throw invalid_argument("meta-features need a non-empty index set");
    }
    // Sorting makes the summary independent of the order the caller listed the indices in.
    std::vector<std::size_t> sorted(indices.begin(), indices.end());
    std::sort(sorted.begin(), sorted.end());
    return meta_features(ds.features(sorted), ds.labels(sorted));
}

const std::array<std::array<std::size_t, 6>, 10> &gas_reference_counts() noexcept {
    static const std::array<std::array<std::size_t, 6>, 10> counts{ {
        { 90, 98, 83, 30, 70, 74 },
        { 164, 334, 100, 109, 532, 5 },
        { 365, 490, 216, 240, 275, 0 },
        { 64, 43, 12, 30, 12, 0 },
        { 28, 40, 20, 46, 63, 0 },
        { 514, 574, 110, 29, 606, 467 },
        { 649, 662, 360, 744, 630, 568 },
        { 30, 30, 40, 33, 143, 18 },
        { 61, 55, 100, 75, 78, 101 },
        { 600, 600, 600, 600, 600, 600 },
    } };
    return counts;
}

const std::array<std::size_t, 6> &gas_reference_class_totals() noexcept {
    static const std::array<std::size_t, 6> totals{ 2565, 2926, 1641, 1936, 3009, 1833 };
    return totals;
}

}  // namespace driftml::data
