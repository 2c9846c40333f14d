// Tree-based learners: decision tree, random forest, bagging, AdaBoost (SAMME), gradient boosting.

#include "learners/internal.hpp"
#include "learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace driftml::learners::detail {

namespace {

TreeParams tree_params_from(const ParamSet &p, std::size_t feature_count) {
    TreeParams t;
    t.criterion = p.choice("criterion") == "entropy" ? Criterion::entropy : Criterion::gini;
    t.max_depth = p.flag("limit_depth") ? static_cast<std::size_t>(p.integer("max_depth")) : 0;
    t.min_samples_split = static_cast<std::size_t>(p.integer("min_samples_split"));
    t.min_samples_leaf = static_cast<std::size_t>(p.integer("min_samples_leaf"));
    t.max_features = feature_budget(p.choice("max_features"), feature_count);
    return t;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{ 0 });
    return rows;
}

nlohmann::json trees_to_json(const std::vector<Tree> &trees) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &t : trees) {
        arr.push_back(t.to_json());
    }
    return arr;
}

std::vector<Tree> trees_from_json(const nlohmann::json &arr) {
    std::vector<Tree> trees;
    for (const auto &t : arr) {
        trees.push_back(Tree::from_json(t));
    }
    return trees;
}

class ConstantClassifier final : public Classifier {
  public:
    ConstantClassifier(std::size_t n_classes, std::size_t index) : n_classes_{ n_classes }, index_{ index } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        Matrix out(X.rows(), n_classes_, 0.0);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            out(i, index_) = 1.0;
        }
        return out;
    }
    [[nodiscard]] nlohmann::json state() const override { return { { "n_classes", n_classes_ }, { "index", index_ } }; }

  private:
    std::size_t n_classes_;
    std::size_t index_;
};

class TreeClassifier final : public Classifier {
  public:
    TreeClassifier(Tree tree, std::size_t n_classes) : tree_{ std::move(tree) }, n_classes_{ n_classes } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        Matrix out(X.rows(), n_classes_);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const auto leaf = tree_.leaf(X.row(i));
            std::copy(leaf.begin(), leaf.end(), out.row(i).begin());
        }
        return out;
    }
    [[nodiscard]] nlohmann::json state() const override { return { { "n_classes", n_classes_ }, { "tree", tree_.to_json() } }; }

    [[nodiscard]] const Tree &tree() const noexcept { return tree_; }

  private:
    Tree tree_;
    std::size_t n_classes_;
};

// Random forest votes: each tree contributes its leaf argmax.
class ForestClassifier final : public Classifier {
  public:
    ForestClassifier(std::vector<Tree> trees, std::size_t n_classes, bool soft) : trees_{ std::move(trees) }, n_classes_{ n_classes }, soft_{ soft } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        Matrix out(X.rows(), n_classes_, 0.0);
        const double share = 1.0 / static_cast<double>(trees_.size());
        for (std::size_t i = 0; i < X.rows(); ++i) {
            auto row = out.row(i);
            for (const auto &t : trees_) {
                const auto leaf = t.leaf(X.row(i));
                if (soft_) {
                    for (std::size_t c = 0; c < n_classes_; ++c) {
                        row[c] += share * leaf[c];
                    }
                } else {
                    row[argmax(leaf)] += share;
                }
            }
        }
        return out;
    }
    [[nodiscard]] nlohmann::json state() const override { return { { "n_classes", n_classes_ }, { "soft", soft_ }, { "trees", trees_to_json(trees_) } }; }

  private:
    std::vector<Tree> trees_;
    std::size_t n_classes_;
    bool soft_;
};

class AdaBoostClassifier final : public Classifier {
  public:
    AdaBoostClassifier(std::vector<Tree> trees, std::vector<double> alphas, std::size_t n_classes) : trees_{ std::move(trees) }, alphas_{ std::move(alphas) }, n_classes_{ n_classes } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        Matrix out(X.rows(), n_classes_, 0.0);
        const double temperature = n_classes_ > 1 ? static_cast<double>(n_classes_ - 1) : 1.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            auto row = out.row(i);
            for (std::size_t t = 0; t < trees_.size(); ++t) {
                row[argmax(trees_[t].leaf(X.row(i)))] += alphas_[t];
            }
            for (auto &v : row) {
                v /= temperature;
            }
        }
        softmax_rows(out);
        return out;
    }
    [[nodiscard]] nlohmann::json state() const override { return { { "n_classes", n_classes_ }, { "alphas", alphas_ }, { "trees", trees_to_json(trees_) } }; }

  private:
    std::vector<Tree> trees_;
    std::vector<double> alphas_;
    std::size_t n_classes_;
};

// One-vs-rest logistic boosting: class k score F_k = init_k + lr * sum of tree outputs.
class GradientBoostingClassifier final : public Classifier {
  public:
    GradientBoostingClassifier(std::vector<std::vector<Tree>> trees, std::vector<double> init, double learning_rate) : trees_{ std::move(trees) }, init_{ std::move(init) }, learning_rate_{ learning_rate } {}

    [[nodiscard]] Matrix proba(const Matrix &X) const override {
        const std::size_t C = init_.size();
        Matrix out(X.rows(), C);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            auto row = out.row(i);
            double total = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                double f = init_[c];
                for (const auto &t : trees_[c]) {
                    f += learning_rate_ * t.leaf(X.row(i))[0];
                }
                row[c] = 1.0 / (1.0 + std::exp(-f));
                total += row[c];
            }
            for (auto &v : row) {
                v = total > 0.0 ? v / total : 1.0 / static_cast<double>(C);
            }
        }
        return out;
    }
    [[nodiscard]] nlohmann::json state() const override {
        nlohmann::json per_class = nlohmann::json::array();
        for (const auto &ts : trees_) {
            per_class.push_back(trees_to_json(ts));
        }
        return { { "init", init_ }, { "learning_rate", learning_rate_ }, { "trees", per_class } };
    }

  private:
    std::vector<std::vector<Tree>> trees_;
    std::vector<double> init_;
    double learning_rate_;
};

}  // namespace

ClassifierPtr fit_constant(std::size_t n_classes, std::size_t class_index) { return std::make_shared<ConstantClassifier>(n_classes, class_index); }

ClassifierPtr load_constant(const nlohmann::json &state) { return std::make_shared<ConstantClassifier>(state.at("n_classes").get<std::size_t>(), state.at("index").get<std::size_t>()); }

ClassifierPtr fit_decision_tree(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const auto binned = BinnedMatrix::build(data.X);
    const auto rows = all_rows(data.X.rows());
    rng_type rng{ mix_seed(ctx.seed, 0) };
    auto tree = build_classification_tree(binned, data.y, data.n_classes, data.w, rows, tree_params_from(p, data.X.cols()), rng, ctx.deadline);
    ctx.info.iterations = 1;
    return std::make_shared<TreeClassifier>(std::move(tree), data.n_classes);
}

ClassifierPtr load_decision_tree(const nlohmann::json &state) { return std::make_shared<TreeClassifier>(Tree::from_json(state.at("tree")), state.at("n_classes").get<std::size_t>()); }

ClassifierPtr fit_random_forest(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const auto binned = BinnedMatrix::build(data.X);
    const auto rows = all_rows(data.X.rows());
    const auto params = tree_params_from(p, data.X.cols());
    const bool bootstrap = p.flag("bootstrap");
    const auto n_trees = static_cast<std::size_t>(p.integer("n_estimators"));
    const std::size_t n = data.X.rows();

    std::vector<Tree> trees;
    std::vector<double> weights(n);
    for (std::size_t t = 0; t < n_trees; ++t) {
        ctx.deadline.check();
        rng_type rng{ mix_seed(ctx.seed, t) };
        if (bootstrap) {
            std::fill(weights.begin(), weights.end(), 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                weights[uniform_index(rng, n)] += 1.0;
            }
            for (std::size_t i = 0; i < n; ++i) {
                weights[i] *= data.w[i];
            }
        } else {
            std::copy(data.w.begin(), data.w.end(), weights.begin());
        }
        trees.push_back(build_classification_tree(binned, data.y, data.n_classes, weights, rows, params, rng, ctx.deadline));
    }
    ctx.info.iterations = trees.size();
    return std::make_shared<ForestClassifier>(std::move(trees), data.n_classes, false);
}

ClassifierPtr load_random_forest(const nlohmann::json &state) { return std::make_shared<ForestClassifier>(trees_from_json(state.at("trees")), state.at("n_classes").get<std::size_t>(), state.at("soft").get<bool>()); }

ClassifierPtr fit_bagging(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const auto binned = BinnedMatrix::build(data.X);
    const auto rows = all_rows(data.X.rows());
    const TreeParams params{};
    const auto n_trees = static_cast<std::size_t>(p.integer("n_estimators"));
    const std::size_t n = data.X.rows();
    const auto draws = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(p.real("subsample") * static_cast<double>(n))));

    std::vector<Tree> trees;
    std::vector<double> weights(n);
    for (std::size_t t = 0; t < n_trees; ++t) {
        ctx.deadline.check();
        rng_type rng{ mix_seed(ctx.seed, t) };
        std::fill(weights.begin(), weights.end(), 0.0);
        for (std::size_t k = 0; k < draws; ++k) {
            weights[uniform_index(rng, n)] += 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] *= data.w[i];
        }
        trees.push_back(build_classification_tree(binned, data.y, data.n_classes, weights, rows, params, rng, ctx.deadline));
    }
    ctx.info.iterations = trees.size();
    return std::make_shared<ForestClassifier>(std::move(trees), data.n_classes, true);
}

ClassifierPtr load_bagging(const nlohmann::json &state) { return load_random_forest(state); }

ClassifierPtr fit_adaboost(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const auto binned = BinnedMatrix::build(data.X);
    const auto rows = all_rows(data.X.rows());
    TreeParams params;
    params.max_depth = static_cast<std::size_t>(p.integer("max_depth"));
    const auto rounds = static_cast<std::size_t>(p.integer("n_estimators"));
    const double learning_rate = p.real("learning_rate");
    const std::size_t n = data.X.rows();
    const auto K = static_cast<double>(data.n_classes);

    std::vector<double> weights(data.w.begin(), data.w.end());
    std::vector<Tree> trees;
    std::vector<double> alphas;
    for (std::size_t t = 0; t < rounds; ++t) {
        ctx.deadline.check();
        rng_type rng{ mix_seed(ctx.seed, t) };
        Tree tree = build_classification_tree(binned, data.y, data.n_classes, weights, rows, params, rng, ctx.deadline);

        std::vector<bool> miss(n);
        double total = 0.0;
        double wrong = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            miss[i] = argmax(tree.leaf(data.X.row(i))) != static_cast<std::size_t>(data.y[i]);
            total += weights[i];
            wrong += miss[i] ? weights[i] : 0.0;
        }
        const double err = total > 0.0 ? wrong / total : 0.0;
        if (err <= 1e-12) {
            // Perfect round: it decides alone.
            trees.push_back(std::move(tree));
            alphas.push_back(1.0);
            break;
        }
        if (err >= 1.0 - 1.0 / K) {
            // No better than chance; keep the first round so the model is never empty.
            if (trees.empty()) {
                trees.push_back(std::move(tree));
                alphas.push_back(1.0);
            }
            break;
        }
        const double alpha = learning_rate * (std::log((1.0 - err) / err) + std::log(K - 1.0));
        trees.push_back(std::move(tree));
        alphas.push_back(alpha);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (miss[i]) {
                weights[i] *= std::exp(alpha);
            }
            norm += weights[i];
        }
        for (auto &w : weights) {
            w /= norm;
        }
    }
    ctx.info.iterations = trees.size();
    ctx.info.early_stopped = trees.size() < rounds;
    return std::make_shared<AdaBoostClassifier>(std::move(trees), std::move(alphas), data.n_classes);
}

ClassifierPtr load_adaboost(const nlohmann::json &state) {
    return std::make_shared<AdaBoostClassifier>(trees_from_json(state.at("trees")), state.at("alphas").get<std::vector<double>>(), state.at("n_classes").get<std::size_t>());
}

ClassifierPtr fit_gradient_boosting(const TrainingSet &data, const ParamSet &p, FitContext ctx) {
    const auto binned = BinnedMatrix::build(data.X);
    const auto rows = all_rows(data.X.rows());
    TreeParams params;
    params.max_depth = static_cast<std::size_t>(p.integer("max_depth"));
    params.l2 = 1.0;
    const auto rounds = static_cast<std::size_t>(p.integer("n_estimators"));
    const double learning_rate = p.real("learning_rate");
    const std::size_t n = data.X.rows();
    const std::size_t C = data.n_classes;

    const double total_w = std::accumulate(data.w.begin(), data.w.end(), 0.0);
    std::vector<double> init(C);
    for (std::size_t c = 0; c < C; ++c) {
        double pos = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pos += static_cast<std::size_t>(data.y[i]) == c ? data.w[i] : 0.0;
        }
        const double prior = std::clamp(pos / total_w, 1e-6, 1.0 - 1e-6);
        init[c] = std::log(prior / (1.0 - prior));
    }

    std::vector<std::vector<Tree>> trees(C);
    std::vector<double> score(n);
    std::vector<double> g(n);
    std::vector<double> h(n);
    for (std::size_t c = 0; c < C; ++c) {
        std::fill(score.begin(), score.end(), init[c]);
        for (std::size_t t = 0; t < rounds; ++t) {
            ctx.deadline.check();
            for (std::size_t i = 0; i < n; ++i) {
                const double prob = 1.0 / (1.0 + std::exp(-score[i]));
                const double target = static_cast<std::size_t>(data.y[i]) == c ? 1.0 : 0.0;
                g[i] = data.w[i] * (prob - target);
                h[i] = data.w[i] * std::max(prob * (1.0 - prob), 1e-12);
            }
            rng_type rng{ mix_seed(ctx.seed, c * rounds + t) };
            Tree tree = build_regression_tree(binned, g, h, rows, params, rng, ctx.deadline);
            for (std::size_t i = 0; i < n; ++i) {
                score[i] += learning_rate * tree.leaf(data.X.row(i))[0];
            }
            trees[c].push_back(std::move(tree));
        }
    }
    ctx.info.iterations = rounds;
    return std::make_shared<GradientBoostingClassifier>(std::move(trees), std::move(init), learning_rate);
}

ClassifierPtr load_gradient_boosting(const nlohmann::json &state) {
    std::vector<std::vector<Tree>> trees;
    for (const auto &per_class : state.at("trees")) {
        trees.push_back(trees_from_json(per_class));
    }
    return std::make_shared<GradientBoostingClassifier>(std::move(trees), state.at("init").get<std::vector<double>>(), state.at("learning_rate").get<double>());
}

}  // namespace driftml::learners::detail
