#include "driftml/preprocess.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace driftml::preprocess {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N> &table, std::string_view what) {
    for (const auto &[name, value] : table) {
        if (name == s) {
            return value;
        }
    }
    throw config_error("unknown " + std::string{ what } + " '" + std::string{ s } + "'");
}

constexpr std::array<std::pair<std::string_view, Imputation>, 4> imputation_names{ { { "none", Imputation::none }, { "mean", Imputation::mean }, { "median", Imputation::median }, { "most_frequent", Imputation::most_frequent } } };
constexpr std::array<std::pair<std::string_view, Scaling>, 3> scaling_names{ { { "none", Scaling::none }, { "standardize", Scaling::standardize }, { "minmax", Scaling::minmax } } };
constexpr std::array<std::pair<std::string_view, FeatureStepKind>, 4> step_names{ { { "none", FeatureStepKind::none }, { "polynomial", FeatureStepKind::polynomial }, { "agglomeration", FeatureStepKind::agglomeration }, { "pca", FeatureStepKind::pca } } };
constexpr std::array<std::pair<std::string_view, Balancing>, 2> balancing_names{ { { "none", Balancing::none }, { "inverse_frequency_weights", Balancing::inverse_frequency_weights } } };

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::array<std::pair<std::string_view, Enum>, N> &table) noexcept {
    for (const auto &[name, value] : table) {
        if (value == v) {
            return name;
        }
    }
    return "unknown";
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double most_frequent_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double best = values.front();
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) {
            ++j;
        }
        if (j - i > best_count) {
            best_count = j - i;
            best = values[i];
        }
        i = j;
    }
    return best;
}

// Average-linkage agglomeration of columns on 1 - |correlation|. Returns cluster index per column,
// clusters numbered by their smallest member.
std::vector<std::size_t> agglomerate_columns(const Matrix &X, std::size_t cluster_count) {
    const std::size_t d = X.cols();
    const std::size_t n = X.rows();
    std::vector<double> mean(d, 0.0);
    std::vector<double> sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) {
            mean[f] += X(i, f);
        }
    }
    for (auto &m : mean) {
        m /= static_cast<double>(n);
    }
    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) {
            centered(i, f) = X(i, f) - mean[f];
            sd[f] += centered(i, f) * centered(i, f);
        }
    }
    for (auto &s : sd) {
        s = std::sqrt(s);
    }

    std::vector<double> dist(d * d, 0.0);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            double corr = 0.0;
            if (sd[a] > 1e-12 && sd[b] > 1e-12) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    s += centered(i, a) * centered(i, b);
                }
                corr = s / (sd[a] * sd[b]);
            }
            dist[a * d + b] = dist[b * d + a] = 1.0 - std::min(1.0, std::abs(corr));
        }
    }

    // Lance-Williams update for average linkage; `alive` clusters keep their representative slot.
    std::vector<std::size_t> owner(d);
    std::iota(owner.begin(), owner.end(), std::size_t{ 0 });
    std::vector<std::size_t> size(d, 1);
    std::vector<bool> alive(d, true);
    std::size_t remaining = d;
    while (remaining > cluster_count) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0;
        std::size_t bb = 0;
        for (std::size_t a = 0; a < d; ++a) {
            if (!alive[a]) {
                continue;
            }
            for (std::size_t b = a + 1; b < d; ++b) {
                if (alive[b] && dist[a * d + b] < best) {
                    best = dist[a * d + b];
                    ba = a;
                    bb = b;
                }
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            if (alive[c] && c != ba && c != bb) {
                const double merged = (static_cast<double>(size[ba]) * dist[ba * d + c] + static_cast<double>(size[bb]) * dist[bb * d + c]) / static_cast<double>(size[ba] + size[bb]);
                dist[ba * d + c] = dist[c * d + ba] = merged;
            }
        }
        size[ba] += size[bb];
        alive[bb] = false;
        for (auto &o : owner) {
            if (o == bb) {
                o = ba;
            }
        }
        --remaining;
    }

    // Slot ba is always the smaller index of a merge, so owner == smallest member.
    std::map<std::size_t, std::size_t> relabel;
    for (const auto o : owner) {
        relabel.emplace(o, relabel.size());
    }
    std::vector<std::size_t> cluster_of(d);
    for (std::size_t f = 0; f < d; ++f) {
        cluster_of[f] = relabel.at(owner[f]);
    }
    return cluster_of;
}

}  // namespace

std::string_view to_string(Imputation v) noexcept { return name_of(v, imputation_names); }
std::string_view to_string(Scaling v) noexcept { return name_of(v, scaling_names); }
std::string_view to_string(FeatureStepKind v) noexcept { return name_of(v, step_names); }
std::string_view to_string(Balancing v) noexcept { return name_of(v, balancing_names); }
Imputation imputation_from_string(std::string_view s) { return parse_enum(s, imputation_names, "imputation"); }
Scaling scaling_from_string(std::string_view s) { return parse_enum(s, scaling_names, "scaling"); }
FeatureStepKind feature_step_from_string(std::string_view s) { return parse_enum(s, step_names, "feature step"); }
Balancing balancing_from_string(std::string_view s) { return parse_enum(s, balancing_names, "balancing"); }

nlohmann::json PreprocessConfig::to_json() const {
    nlohmann::json step{ { "kind", to_string(feature_step.kind) } };
    switch (feature_step.kind) {
        case FeatureStepKind::polynomial:
            step["interaction_only"] = feature_step.interaction_only;
            break;
        case FeatureStepKind::agglomeration:
            step["cluster_count"] = feature_step.cluster_count;
            break;
        case FeatureStepKind::pca:
            step["pca_dim"] = feature_step.pca_dim;
            step["variance_fraction"] = feature_step.pca_variance_fraction;
            break;
        case FeatureStepKind::none:
            break;
    }
    return { { "imputation", to_string(imputation) }, { "scaling", to_string(scaling) }, { "feature_step", step }, { "balancing", to_string(balancing) } };
}

PreprocessConfig PreprocessConfig::from_json(const nlohmann::json &j) {
    PreprocessConfig c;
    c.imputation = imputation_from_string(j.value("imputation", "none"));
    c.scaling = scaling_from_string(j.value("scaling", "none"));
    c.balancing = balancing_from_string(j.value("balancing", "none"));
    if (j.contains("feature_step")) {
        const auto &s = j.at("feature_step");
        c.feature_step.kind = feature_step_from_string(s.value("kind", "none"));
        c.feature_step.interaction_only = s.value("interaction_only", false);
        c.feature_step.cluster_count = s.value("cluster_count", std::size_t{ 1 });
        c.feature_step.pca_dim = s.value("pca_dim", std::size_t{ 0 });
        c.feature_step.pca_variance_fraction = s.value("variance_fraction", 1.0);
    }
    return c;
}

PreprocessConfig pinned_config() noexcept {
    PreprocessConfig c;
    c.imputation = Imputation::mean;
    c.scaling = Scaling::standardize;
    return c;
}

FittedPreprocessor fit_preprocessor(const PreprocessConfig &cfg, const Matrix &X, std::span<const int> /*y*/) {
    if (X.rows() == 0 || X.cols() == 0) {
        throw invalid_argument("cannot fit a preprocessor on an empty matrix");
    }
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();

    FittedPreprocessor p;
    p.config_ = cfg;
    p.input_dim_ = d;

    // Imputation; columns without any finite entry fall back to 0.
    p.fill_.assign(d, 0.0);
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<double> finite;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isfinite(X(i, f))) {
                finite.push_back(X(i, f));
            }
        }
        if (finite.empty()) {
            if (cfg.imputation == Imputation::none) {
                throw invalid_argument("column " + std::to_string(f) + " has no finite entry and imputation is disabled");
            }
            continue;
        }
        switch (cfg.imputation) {
            case Imputation::mean:
                p.fill_[f] = std::accumulate(finite.begin(), finite.end(), 0.0) / static_cast<double>(finite.size());
                break;
            case Imputation::median:
                p.fill_[f] = median_of(std::move(finite));
                break;
            case Imputation::most_frequent:
                p.fill_[f] = most_frequent_of(std::move(finite));
                break;
            case Imputation::none:
                break;
        }
    }

    // Scaling stats on imputed data.
    Matrix work = X;
    if (cfg.imputation != Imputation::none) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < d; ++f) {
                if (!std::isfinite(work(i, f))) {
                    work(i, f) = p.fill_[f];
                }
            }
        }
    }
    p.offset_.assign(d, 0.0);
    p.scale_.assign(d, 1.0);
    if (cfg.scaling == Scaling::standardize) {
        for (std::size_t f = 0; f < d; ++f) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mean += work(i, f);
            }
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                var += (work(i, f) - mean) * (work(i, f) - mean);
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            p.offset_[f] = mean;
            p.scale_[f] = sd > 0.0 ? sd : 1.0;
        }
    } else if (cfg.scaling == Scaling::minmax) {
        for (std::size_t f = 0; f < d; ++f) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, work(i, f));
                hi = std::max(hi, work(i, f));
            }
            p.offset_[f] = lo;
            p.scale_[f] = hi > lo ? hi - lo : 1.0;
        }
    }
    if (cfg.scaling != Scaling::none) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < d; ++f) {
                work(i, f) = (work(i, f) - p.offset_[f]) / p.scale_[f];
            }
        }
    }

    const auto &step = cfg.feature_step;
    switch (step.kind) {
        case FeatureStepKind::none:
            p.output_dim_ = d;
            break;
        case FeatureStepKind::polynomial: {
            const std::size_t pairs = step.interaction_only ? d * (d - 1) / 2 : d * (d + 1) / 2;
            p.output_dim_ = d + pairs;
            if (p.output_dim_ > max_polynomial_width) {
                throw invalid_argument("polynomial expansion of " + std::to_string(d) + " features yields " + std::to_string(p.output_dim_) + " columns, above the limit of " + std::to_string(max_polynomial_width));
            }
            break;
        }
        case FeatureStepKind::agglomeration:
            if (step.cluster_count < 1 || step.cluster_count > d) {
                throw invalid_argument("agglomeration cluster count " + std::to_string(step.cluster_count) + " must lie in [1, " + std::to_string(d) + "]");
            }
            p.cluster_of_ = agglomerate_columns(work, step.cluster_count);
            p.cluster_count_ = step.cluster_count;
            p.output_dim_ = step.cluster_count;
            break;
        case FeatureStepKind::pca: {
            if (step.pca_dim > d) {
                throw invalid_argument("PCA target dimension " + std::to_string(step.pca_dim) + " exceeds input dimension " + std::to_string(d));
            }
            if (step.pca_dim == 0 && !(step.pca_variance_fraction > 0.0 && step.pca_variance_fraction <= 1.0)) {
                throw invalid_argument("PCA variance fraction must lie in (0, 1]");
            }
            p.pca_mean_.assign(d, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t f = 0; f < d; ++f) {
                    p.pca_mean_[f] += work(i, f);
                }
            }
            for (auto &m : p.pca_mean_) {
                m /= static_cast<double>(n);
            }
            Eigen::MatrixXd centered(n, d);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t f = 0; f < d; ++f) {
                    centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = work(i, f) - p.pca_mean_[f];
                }
            }
            const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
            if (solver.info() != Eigen::Success) {
                throw error("PCA eigendecomposition did not converge");
            }
            // Eigen returns ascending eigenvalues.
            std::vector<double> values(d);
            for (std::size_t k = 0; k < d; ++k) {
                values[k] = std::max(0.0, solver.eigenvalues()(static_cast<Eigen::Index>(d - 1 - k)));
            }
            std::size_t keep = step.pca_dim;
            if (keep == 0) {
                const double total = std::accumulate(values.begin(), values.end(), 0.0);
                double acc = 0.0;
                keep = d;
                for (std::size_t k = 0; k < d; ++k) {
                    acc += values[k];
                    if (total <= 0.0 || acc >= step.pca_variance_fraction * total - 1e-12 * total) {
                        keep = k + 1;
                        break;
                    }
                }
            }
            p.components_ = Matrix(keep, d);
            for (std::size_t k = 0; k < keep; ++k) {
                const auto col = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
                // Sign convention: the largest-magnitude loading is positive.
                Eigen::Index pivot = 0;
                col.cwiseAbs().maxCoeff(&pivot);
                const double sign = col(pivot) < 0.0 ? -1.0 : 1.0;
                for (std::size_t f = 0; f < d; ++f) {
                    p.components_(k, f) = sign * col(static_cast<Eigen::Index>(f));
                }
            }
            p.explained_variance_.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(keep));
            p.output_dim_ = keep;
            break;
        }
    }
    return p;
}

Matrix FittedPreprocessor::apply(const Matrix &X) const {
    if (X.cols() != input_dim_) {
        throw invalid_argument("preprocessor expects " + std::to_string(input_dim_) + " columns, got " + std::to_string(X.cols()));
    }
    const std::size_t n = X.rows();
    const std::size_t d = input_dim_;
    Matrix work = X;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = work.row(i);
        for (std::size_t f = 0; f < d; ++f) {
            double v = row[f];
            if (config_.imputation != Imputation::none && !std::isfinite(v)) {
                v = fill_[f];
            }
            if (config_.scaling != Scaling::none) {
                v = (v - offset_[f]) / scale_[f];
            }
            row[f] = v;
        }
    }

    switch (config_.feature_step.kind) {
        case FeatureStepKind::none:
            return work;
        case FeatureStepKind::polynomial: {
            Matrix out(n, output_dim_);
            const bool interaction_only = config_.feature_step.interaction_only;
            for (std::size_t i = 0; i < n; ++i) {
                const auto in = work.row(i);
                auto o = out.row(i);
                std::size_t c = 0;
                for (std::size_t f = 0; f < d; ++f) {
                    o[c++] = in[f];
                }
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t b = interaction_only ? a + 1 : a; b < d; ++b) {
                        o[c++] = in[a] * in[b];
                    }
                }
            }
            return out;
        }
        case FeatureStepKind::agglomeration: {
            Matrix out(n, output_dim_);
            std::vector<double> members(cluster_count_, 0.0);
            for (const auto c : cluster_of_) {
                members[c] += 1.0;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto in = work.row(i);
                auto o = out.row(i);
                for (std::size_t f = 0; f < d; ++f) {
                    o[cluster_of_[f]] += in[f];
                }
                for (std::size_t c = 0; c < cluster_count_; ++c) {
                    o[c] /= members[c];
                }
            }
            return out;
        }
        case FeatureStepKind::pca: {
            Matrix out(n, output_dim_);
            for (std::size_t i = 0; i < n; ++i) {
                const auto in = work.row(i);
                auto o = out.row(i);
                for (std::size_t k = 0; k < output_dim_; ++k) {
                    const auto axis = components_.row(k);
                    double s = 0.0;
                    for (std::size_t f = 0; f < d; ++f) {
                        s += (in[f] - pca_mean_[f]) * axis[f];
                    }
                    o[k] = s;
                }
            }
            return out;
        }
    }
    return work;
}

nlohmann::json FittedPreprocessor::to_json() const {
    nlohmann::json j{ { "config", config_.to_json() }, { "input_dim", input_dim_ }, { "output_dim", output_dim_ }, { "fill", fill_ }, { "offset", offset_ }, { "scale", scale_ } };
    if (config_.feature_step.kind == FeatureStepKind::agglomeration) {
        j["cluster_of"] = cluster_of_;
        j["cluster_count"] = cluster_count_;
    }
    if (config_.feature_step.kind == FeatureStepKind::pca) {
        j["pca_mean"] = pca_mean_;
        j["components"] = components_.data();
        j["explained_variance"] = explained_variance_;
    }
    return j;
}

FittedPreprocessor FittedPreprocessor::from_json(const nlohmann::json &j) {
    FittedPreprocessor p;
    p.config_ = PreprocessConfig::from_json(j.at("config"));
    p.input_dim_ = j.at("input_dim").get<std::size_t>();
    p.output_dim_ = j.at("output_dim").get<std::size_t>();
    p.fill_ = j.at("fill").get<std::vector<double>>();
    p.offset_ = j.at("offset").get<std::vector<double>>();
    p.scale_ = j.at("scale").get<std::vector<double>>();
    if (j.contains("cluster_of")) {
        p.cluster_of_ = j.at("cluster_of").get<std::vector<std::size_t>>();
        p.cluster_count_ = j.at("cluster_count").get<std::size_t>();
    }
    if (j.contains("pca_mean")) {
        p.pca_mean_ = j.at("pca_mean").get<std::vector<double>>();
        p.components_ = Matrix(p.output_dim_, p.input_dim_, j.at("components").get<std::vector<double>>());
        p.explained_variance_ = j.at("explained_variance").get<std::vector<double>>();
    }
    if (p.fill_.size() != p.input_dim_ || p.offset_.size() != p.input_dim_ || p.scale_.size() != p.input_dim_) {
        throw config_error("preprocessor snapshot statistics do not match its input dimension");
    }
    return p;
}

std::vector<double> balance_weights(std::span<const int> y) {
    if (y.empty()) {
        throw invalid_argument("balance_weights needs at least one label");
    }
    std::map<int, std::size_t> counts;
    for (const int label : y) {
        ++counts[label];
    }
    const auto n = static_cast<double>(y.size());
    const auto c = static_cast<double>(counts.size());
    std::vector<double> w(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        w[i] = n / (c * static_cast<double>(counts[y[i]]));
    }
    return w;
}

std::vector<double> sample_weights(const PreprocessConfig &cfg, std::span<const int> y) {
    if (cfg.balancing == Balancing::inverse_frequency_weights) {
        return balance_weights(y);
    }
    return std::vector<double>(y.size(), 1.0);
}

}  // namespace driftml::preprocess
