#include "driftml/ensemble.hpp"

#include "driftml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace driftml::ensemble {

namespace {

constexpr std::string_view ensemble_format = "driftml.ensemble";
constexpr int ensemble_version = 1;

}  // namespace

Matrix Member::predict_proba(const Matrix &X_raw) const {
    return model.predict_proba(preprocessor.apply(X_raw));
}

EnsembleModel::EnsembleModel(std::vector<Member> members, std::vector<double> weights) :
    members_{ std::move(members) },
    weights_{ std::move(weights) } {
    if (members_.empty()) {
        throw invalid_argument("an ensemble needs at least one member");
    }
    if (weights_.size() != members_.size()) {
        throw invalid_argument("ensemble weight count does not match member count");
    }
    if (std::any_of(weights_.begin(), weights_.end(), [](double w) { return !(w >= 0.0); })) {
        throw invalid_argument("ensemble weights must be non-negative");
    }
    if (std::abs(std::accumulate(weights_.begin(), weights_.end(), 0.0) - 1.0) > 1e-9) {
        throw invalid_argument("ensemble weights must sum to 1");
    }
    classes_ = members_.front().model.classes();
    input_dim_ = members_.front().preprocessor.input_dim();
    for (const auto &m : members_) {
        if (m.model.classes() != classes_) {
            throw invalid_argument("ensemble members disagree on the class list");
        }
        if (m.preprocessor.input_dim() != input_dim_) {
            throw invalid_argument("ensemble members disagree on the input width");
        }
    }
}

Matrix EnsembleModel::predict_proba(const Matrix &X) const {
    if (members_.empty()) {
        throw invalid_argument("ensemble is empty");
    }
    if (X.cols() != input_dim_) {
        throw invalid_argument("input has " + std::to_string(X.cols()) + " features, ensemble expects " + std::to_string(input_dim_));
    }
    Matrix out(X.rows(), classes_.size(), 0.0);
    for (std::size_t m = 0; m < members_.size(); ++m) {
        if (weights_[m] == 0.0) {
            continue;
        }
        const Matrix p = members_[m].predict_proba(X);
        for (std::size_t k = 0; k < out.data().size(); ++k) {
            out.data()[k] += weights_[m] * p.data()[k];
        }
    }
    return out;
}

std::vector<int> EnsembleModel::predict(const Matrix &X) const {
    return learners::labels_from_proba(predict_proba(X), classes_);
}

nlohmann::json EnsembleModel::composition() const {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t m = 0; m < members_.size(); ++m) {
        out.push_back({
            { "algorithm", learners::to_string(members_[m].model.algorithm()) },
            { "params", members_[m].model.params().to_json() },
            { "preprocess", members_[m].preprocessor.config().to_json() },
            { "weight", weights_[m] },
        });
    }
    return out;
}

nlohmann::json EnsembleModel::to_json() const {
    nlohmann::json members = nlohmann::json::array();
    for (const auto &m : members_) {
        members.push_back({ { "model", m.model.to_json() }, { "preprocessor", m.preprocessor.to_json() } });
    }
    return { { "format", ensemble_format }, { "version", ensemble_version }, { "weights", weights_ }, { "members", members } };
}

EnsembleModel EnsembleModel::from_json(const nlohmann::json &j) {
    if (j.value("format", "") != ensemble_format || j.value("version", 0) != ensemble_version) {
        throw parse_error("not a driftml ensemble snapshot", 1, 1);
    }
    std::vector<Member> members;
    for (const auto &m : j.at("members")) {
        members.push_back({ learners::TrainedModel::from_json(m.at("model")), preprocess::FittedPreprocessor::from_json(m.at("preprocessor")) });
    }
    return { std::move(members), j.at("weights").get<std::vector<double>>() };
}

SelectionTrace greedy_selection(std::span<const Matrix> validation_proba, std::span<const int> val_labels, std::span<const int> classes, const SelectionOptions &options) {
    if (validation_proba.empty()) {
        throw invalid_argument("ensemble selection needs at least one candidate");
    }
    if (options.max_rounds == 0) {
        throw invalid_argument("max_rounds must be at least 1");
    }
    const std::size_t rows = validation_proba.front().rows();
    const std::size_t cols = validation_proba.front().cols();
    for (const auto &p : validation_proba) {
        if (p.rows() != rows || p.cols() != cols) {
            throw invalid_argument("candidate probability matrices differ in shape");
        }
    }
    if (rows != val_labels.size() || cols != classes.size()) {
        throw invalid_argument("probability shape does not match validation labels and classes");
    }

    SelectionTrace trace;
    trace.counts.assign(validation_proba.size(), 0);
    Matrix sum(rows, cols, 0.0);
    Matrix trial(rows, cols);
    double best = -1.0;
    std::size_t stall = 0;
    for (std::size_t round = 0; round < options.max_rounds; ++round) {
        const auto size = static_cast<double>(round + 1);
        std::size_t pick = 0;
        double pick_score = -1.0;
        for (std::size_t c = 0; c < validation_proba.size(); ++c) {
            for (std::size_t k = 0; k < sum.data().size(); ++k) {
                trial.data()[k] = (sum.data()[k] + validation_proba[c].data()[k]) / size;
            }
            const double s = metrics::macro_f1(val_labels, learners::labels_from_proba(trial, classes));
            if (s > pick_score) {
                pick_score = s;
                pick = c;
            }
        }
        for (std::size_t k = 0; k < sum.data().size(); ++k) {
            sum.data()[k] += validation_proba[pick].data()[k];
        }
        trace.picks.push_back(pick);
        trace.round_scores.push_back(pick_score);
        if (pick_score > best) {
            best = pick_score;
            trace.kept_rounds = round + 1;
            stall = 0;
        } else if (++stall >= options.patience) {
            break;
        }
    }
    for (std::size_t r = 0; r < trace.kept_rounds; ++r) {
        ++trace.counts[trace.picks[r]];
    }
    trace.score = best;
    return trace;
}

EnsembleModel ensemble_select(std::span<const Member> candidates, std::span<const Matrix> validation_proba, std::span<const int> val_labels, const SelectionOptions &options, SelectionTrace *trace) {
    if (candidates.size() != validation_proba.size()) {
        throw invalid_argument("candidate count does not match probability matrix count");
    }
    if (candidates.empty()) {
        throw invalid_argument("ensemble selection needs at least one candidate");
    }
    const auto &classes = candidates.front().model.classes();
    SelectionTrace t = greedy_selection(validation_proba, val_labels, classes, options);

    // members in order of first selection
    std::vector<Member> members;
    std::vector<double> weights;
    std::vector<bool> seen(candidates.size(), false);
    const auto total = static_cast<double>(t.kept_rounds);
    for (std::size_t r = 0; r < t.kept_rounds; ++r) {
        const std::size_t c = t.picks[r];
        if (!seen[c]) {
            seen[c] = true;
            members.push_back(candidates[c]);
            weights.push_back(static_cast<double>(t.counts[c]) / total);
        }
    }
    if (trace != nullptr) {
        *trace = std::move(t);
    }
    return { std::move(members), std::move(weights) };
}

}  // namespace driftml::ensemble
