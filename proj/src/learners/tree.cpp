#include "learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace driftml::learners::detail {

BinnedMatrix BinnedMatrix::build(const Matrix &X, std::size_t max_bins) {
    max_bins = std::clamp<std::size_t>(max_bins, 2, 256);
    BinnedMatrix b;
    b.rows_ = X.rows();
    b.cols_ = X.cols();
    b.codes_.assign(b.rows_ * b.cols_, 0);
    b.bin_min_.resize(b.cols_);
    b.bin_max_.resize(b.cols_);

    std::vector<double> values;
    for (std::size_t f = 0; f < b.cols_; ++f) {
        values.clear();
        for (std::size_t i = 0; i < b.rows_; ++i) {
            if (std::isfinite(X(i, f))) {
                values.push_back(X(i, f));
            }
        }
        std::sort(values.begin(), values.end());
        auto &lo = b.bin_min_[f];
        auto &hi = b.bin_max_[f];
        if (values.empty()) {
            lo.push_back(0.0);
            hi.push_back(0.0);
        } else {
            // distinct values with multiplicities
            std::vector<std::pair<double, std::size_t>> distinct;
            for (const double v : values) {
                if (distinct.empty() || distinct.back().first != v) {
                    distinct.emplace_back(v, 0);
                }
                ++distinct.back().second;
            }
            if (distinct.size() <= max_bins) {
                for (const auto &[v, c] : distinct) {
                    lo.push_back(v);
                    hi.push_back(v);
                }
            } else {
                const double per_bin = static_cast<double>(values.size()) / static_cast<double>(max_bins);
                std::size_t seen = 0;
                std::size_t k = 0;
                lo.push_back(distinct.front().first);
                for (std::size_t u = 0; u < distinct.size(); ++u) {
                    seen += distinct[u].second;
                    const bool last = u + 1 == distinct.size();
                    if (!last && static_cast<double>(seen) >= per_bin * static_cast<double>(k + 1) && lo.size() < max_bins) {
                        hi.push_back(distinct[u].first);
                        lo.push_back(distinct[u + 1].first);
                        ++k;
                    }
                }
                hi.push_back(distinct.back().first);
            }
        }
        std::uint8_t *col = b.codes_.data() + f * b.rows_;
        for (std::size_t i = 0; i < b.rows_; ++i) {
            const double v = X(i, f);
            if (!std::isfinite(v)) {
                col[i] = 0;
                continue;
            }
            const auto it = std::lower_bound(hi.begin(), hi.end(), v);
            col[i] = static_cast<std::uint8_t>(std::min<std::size_t>(static_cast<std::size_t>(it - hi.begin()), hi.size() - 1));
        }
    }
    return b;
}

std::span<const double> Tree::leaf(std::span<const double> x) const noexcept {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
        const auto &n = nodes_[node];
        node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] > n.threshold ? n.right : n.left);
    }
    return { values_.data() + nodes_[node].value_offset, value_width_ };
}

std::size_t Tree::depth() const noexcept {
    if (nodes_.empty()) {
        return 0;
    }
    std::vector<std::pair<std::size_t, std::size_t>> stack{ { 0, 0 } };
    std::size_t best = 0;
    while (!stack.empty()) {
        const auto [node, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (nodes_[node].feature >= 0) {
            stack.emplace_back(static_cast<std::size_t>(nodes_[node].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes_[node].right), d + 1);
        }
    }
    return best;
}

nlohmann::json Tree::to_json() const {
    nlohmann::json feature = nlohmann::json::array();
    nlohmann::json threshold = nlohmann::json::array();
    nlohmann::json left = nlohmann::json::array();
    nlohmann::json right = nlohmann::json::array();
    nlohmann::json offset = nlohmann::json::array();
    for (const auto &n : nodes_) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        offset.push_back(n.value_offset);
    }
    return { { "feature", feature }, { "threshold", threshold }, { "left", left }, { "right", right }, { "value_offset", offset }, { "values", values_ }, { "value_width", value_width_ } };
}

Tree Tree::from_json(const nlohmann::json &j) {
    const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<std::int32_t>>();
    const auto right = j.at("right").get<std::vector<std::int32_t>>();
    const auto offset = j.at("value_offset").get<std::vector<std::uint32_t>>();
    std::vector<TreeNode> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes[i] = TreeNode{ feature[i], threshold.at(i), left.at(i), right.at(i), offset.at(i) };
    }
    return Tree{ std::move(nodes), j.at("values").get<std::vector<double>>(), j.at("value_width").get<std::size_t>() };
}

std::size_t feature_budget(std::string_view rule, std::size_t feature_count) {
    const auto d = static_cast<double>(feature_count);
    if (rule == "sqrt") {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(d))));
    }
    if (rule == "log2") {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(std::max(d, 1.0)))));
    }
    if (rule == "half") {
        return std::max<std::size_t>(1, feature_count / 2);
    }
    if (rule == "all") {
        return feature_count;
    }
    throw invalid_argument("unknown max_features rule '" + std::string{ rule } + "'");
}

namespace {

// Class-distribution statistics: per class weight, then the row count.
struct ClassificationPolicy {
    std::span<const int> y;
    std::span<const double> w;
    std::size_t n_classes;
    Criterion criterion;

    [[nodiscard]] std::size_t width() const noexcept { return n_classes + 1; }
    [[nodiscard]] std::size_t value_width() const noexcept { return n_classes; }

    void add(std::size_t row, double *stats) const noexcept {
        stats[static_cast<std::size_t>(y[row])] += w[row];
        stats[n_classes] += 1.0;
    }

    [[nodiscard]] double total_weight(const double *stats) const noexcept {
        double t = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            t += stats[c];
        }
        return t;
    }

    // Weighted impurity: W * impurity(node).
    [[nodiscard]] double cost(const double *stats) const noexcept {
        const double total = total_weight(stats);
        if (total <= 0.0) {
            return 0.0;
        }
        double acc = 0.0;
        if (criterion == Criterion::gini) {
            for (std::size_t c = 0; c < n_classes; ++c) {
                acc += stats[c] * stats[c];
            }
            return total - acc / total;
        }
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (stats[c] > 0.0) {
                acc -= stats[c] * std::log(stats[c] / total);
            }
        }
        return acc;
    }

    [[nodiscard]] bool usable_side(const double *stats) const noexcept { return total_weight(stats) > 0.0; }

    [[nodiscard]] bool pure(const double *stats) const noexcept {
        std::size_t nonzero = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            nonzero += stats[c] > 0.0 ? 1 : 0;
        }
        return nonzero <= 1;
    }

    void leaf(const double *stats, std::vector<double> &out) const {
        const double total = total_weight(stats);
        for (std::size_t c = 0; c < n_classes; ++c) {
            out.push_back(total > 0.0 ? stats[c] / total : 1.0 / static_cast<double>(n_classes));
        }
    }
};

// Gradient statistics: G, H, sum g^2, row count.
struct RegressionPolicy {
    std::span<const double> g;
    std::span<const double> h;
    double l2;

    [[nodiscard]] static constexpr std::size_t width() noexcept { return 4; }
    [[nodiscard]] static constexpr std::size_t value_width() noexcept { return 2; }

    void add(std::size_t row, double *stats) const noexcept {
        stats[0] += g[row];
        stats[1] += h[row];
        stats[2] += g[row] * g[row];
        stats[3] += 1.0;
    }

    [[nodiscard]] double cost(const double *stats) const noexcept {
        const double denom = stats[1] + l2;
        return denom > 0.0 ? -stats[0] * stats[0] / denom : 0.0;
    }

    [[nodiscard]] static bool usable_side(const double *stats) noexcept { return stats[3] > 0.0; }

    [[nodiscard]] static bool pure(const double *stats) noexcept {
        const double n = stats[3];
        const double var = stats[2] / n - (stats[0] / n) * (stats[0] / n);
        return var <= 1e-14 * std::max(1.0, stats[2] / n);
    }

    void leaf(const double *stats, std::vector<double> &out) const {
        const double denom = stats[1] + l2;
        const double n = stats[3];
        out.push_back(denom > 0.0 ? -stats[0] / denom : 0.0);
        out.push_back(std::max(0.0, stats[2] / n - (stats[0] / n) * (stats[0] / n)));
    }
};

template <typename Policy>
Tree grow(const BinnedMatrix &X, const Policy &policy, std::span<const std::size_t> rows_in, const TreeParams &params, rng_type &rng, const Deadline &deadline) {
    const std::size_t width = policy.width();
    const std::size_t d = X.cols();
    const std::size_t max_features = params.max_features == 0 ? d : std::min(params.max_features, d);
    const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);

    std::vector<std::size_t> rows(rows_in.begin(), rows_in.end());
    std::vector<TreeNode> nodes;
    std::vector<double> values;

    struct Pending {
        std::size_t begin;
        std::size_t end;
        std::size_t depth;
        std::size_t node;
    };
    std::vector<Pending> stack;
    nodes.emplace_back();
    stack.push_back({ 0, rows.size(), 0, 0 });

    std::vector<std::size_t> feature_pool(d);
    std::vector<double> node_stats(width);
    std::vector<double> left(width);
    std::vector<double> right(width);
    std::vector<double> hist;

    const auto make_leaf = [&](std::size_t node, const std::vector<double> &stats) {
        nodes[node].feature = -1;
        nodes[node].value_offset = static_cast<std::uint32_t>(values.size());
        policy.leaf(stats.data(), values);
    };

    while (!stack.empty()) {
        const Pending job = stack.back();
        stack.pop_back();
        deadline.check();

        std::fill(node_stats.begin(), node_stats.end(), 0.0);
        for (std::size_t k = job.begin; k < job.end; ++k) {
            policy.add(rows[k], node_stats.data());
        }
        const std::size_t count = job.end - job.begin;
        const bool depth_exhausted = params.max_depth > 0 && job.depth >= params.max_depth;
        if (depth_exhausted || count < params.min_samples_split || count < 2 * min_leaf || policy.pure(node_stats.data())) {
            make_leaf(job.node, node_stats);
            continue;
        }

        // candidate features, ascending so ties resolve to the lowest index
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{ 0 });
        if (max_features < d) {
            for (std::size_t k = 0; k < max_features; ++k) {
                const std::size_t j = k + uniform_index(rng, d - k);
                std::swap(feature_pool[k], feature_pool[j]);
            }
            std::sort(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(max_features));
        }

        const double parent_cost = policy.cost(node_stats.data());
        const double min_gain = 1e-12 * std::max(1.0, std::abs(parent_cost));
        double best_gain = min_gain;
        std::size_t best_feature = d;
        std::size_t best_bin = 0;
        std::size_t best_next_bin = 0;

        for (std::size_t fi = 0; fi < max_features; ++fi) {
            const std::size_t f = feature_pool[fi];
            const std::size_t nb = X.bin_count(f);
            if (nb < 2) {
                continue;
            }
            hist.assign(nb * width, 0.0);
            const std::uint8_t *codes = X.column(f);
            for (std::size_t k = job.begin; k < job.end; ++k) {
                policy.add(rows[k], hist.data() + static_cast<std::size_t>(codes[rows[k]]) * width);
            }
            std::fill(left.begin(), left.end(), 0.0);
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                const double *bin = hist.data() + b * width;
                if (bin[width - 1] == 0.0) {
                    continue;
                }
                for (std::size_t s = 0; s < width; ++s) {
                    left[s] += bin[s];
                }
                const double left_count = left[width - 1];
                const double right_count = static_cast<double>(count) - left_count;
                if (left_count < static_cast<double>(min_leaf) || right_count < static_cast<double>(min_leaf)) {
                    continue;
                }
                for (std::size_t s = 0; s < width; ++s) {
                    right[s] = node_stats[s] - left[s];
                }
                if (!policy.usable_side(left.data()) || !policy.usable_side(right.data())) {
                    continue;
                }
                const double gain = parent_cost - policy.cost(left.data()) - policy.cost(right.data());
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_bin = b;
                    // first bin to the right that has rows at this node
                    std::size_t next = b + 1;
                    while (next < nb && hist[next * width + width - 1] == 0.0) {
                        ++next;
                    }
                    best_next_bin = next;
                }
            }
        }

        if (best_feature == d) {
            make_leaf(job.node, node_stats);
            continue;
        }

        const double lo = X.bin_max(best_feature, best_bin);
        const double hi = X.bin_min(best_feature, best_next_bin);
        double threshold = 0.5 * (lo + hi);
        if (params.random_thresholds) {
            threshold = lo + (hi - lo) * uniform01(rng);
            if (!(threshold < hi)) {
                threshold = lo;
            }
        }
        if (!(threshold >= lo && threshold < hi)) {
            threshold = lo;
        }

        const std::uint8_t *codes = X.column(best_feature);
        const auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(job.begin), rows.begin() + static_cast<std::ptrdiff_t>(job.end), [&](std::size_t r) { return codes[r] <= best_bin; });
        const auto split = static_cast<std::size_t>(mid - rows.begin());

        const auto left_id = nodes.size();
        nodes.emplace_back();
        const auto right_id = nodes.size();
        nodes.emplace_back();
        nodes[job.node].feature = static_cast<std::int32_t>(best_feature);
        nodes[job.node].threshold = threshold;
        nodes[job.node].left = static_cast<std::int32_t>(left_id);
        nodes[job.node].right = static_cast<std::int32_t>(right_id);

        stack.push_back({ split, job.end, job.depth + 1, right_id });
        stack.push_back({ job.begin, split, job.depth + 1, left_id });
    }
    return Tree{ std::move(nodes), std::move(values), policy.value_width() };
}

}  // namespace

Tree build_classification_tree(const BinnedMatrix &X, std::span<const int> y, std::size_t n_classes, std::span<const double> weights, std::span<const std::size_t> rows, const TreeParams &params, rng_type &rng, const Deadline &deadline) {
    std::vector<std::size_t> used;
    used.reserve(rows.size());
    for (const auto r : rows) {
        if (weights[r] > 0.0) {
            used.push_back(r);
        }
    }
    const ClassificationPolicy policy{ y, weights, n_classes, params.criterion };
    return grow(X, policy, used, params, rng, deadline);
}

Tree build_regression_tree(const BinnedMatrix &X, std::span<const double> grad, std::span<const double> hess, std::span<const std::size_t> rows, const TreeParams &params, rng_type &rng, const Deadline &deadline) {
    const RegressionPolicy policy{ grad, hess, params.l2 };
    return grow(X, policy, rows, params, rng, deadline);
}

}  // namespace driftml::learners::detail
