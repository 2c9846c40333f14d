#include "driftml/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace driftml::metrics {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::vector<int> label_union(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

nlohmann::json averages_json(const Averages &a) {
    return { { "precision", a.precision }, { "recall", a.recall }, { "f1", a.f1 } };
}

// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[order[k]] = mean_rank;
        }
        i = j + 1;
    }
    return r;
}

}  // namespace

EvalReport evaluate(std::span<const int> y_true, std::span<const int> y_pred, std::span<const int> classes) {
    if (y_true.size() != y_pred.size()) {
        throw invalid_argument("y_true has " + std::to_string(y_true.size()) + " labels, y_pred has " + std::to_string(y_pred.size()));
    }
    if (y_true.empty()) {
        throw invalid_argument("cannot evaluate an empty prediction set");
    }
    EvalReport r;
    r.classes = classes.empty() ? label_union(y_true, y_pred) : std::vector<int>(classes.begin(), classes.end());
    std::map<int, std::size_t> pos;
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
        pos[r.classes[c]] = c;
    }
    const std::size_t C = r.classes.size();
    r.confusion.assign(C, std::vector<std::size_t>(C, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const auto t = pos.find(y_true[i]);
        const auto p = pos.find(y_pred[i]);
        if (t == pos.end() || p == pos.end()) {
            throw invalid_argument("label outside the class set at position " + std::to_string(i));
        }
        ++r.confusion[t->second][p->second];
    }
    r.sample_count = y_true.size();

    std::size_t correct = 0;
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t support = 0;
        std::size_t predicted = 0;
        for (std::size_t k = 0; k < C; ++k) {
            support += r.confusion[c][k];
            predicted += r.confusion[k][c];
        }
        const auto tp = static_cast<double>(r.confusion[c][c]);
        correct += r.confusion[c][c];
        ClassMetrics m;
        m.label = r.classes[c];
        m.support = support;
        m.precision = ratio(tp, static_cast<double>(predicted));
        m.recall = ratio(tp, static_cast<double>(support));
        m.f1 = harmonic(m.precision, m.recall);
        r.per_class.push_back(m);
    }
    const auto n = static_cast<double>(r.sample_count);
    for (const auto &m : r.per_class) {
        r.macro.precision += m.precision / static_cast<double>(C);
        r.macro.recall += m.recall / static_cast<double>(C);
        r.macro.f1 += m.f1 / static_cast<double>(C);
        const double share = static_cast<double>(m.support) / n;
        r.weighted.precision += share * m.precision;
        r.weighted.recall += share * m.recall;
        r.weighted.f1 += share * m.f1;
    }
    r.accuracy = static_cast<double>(correct) / n;
    return r;
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
    return evaluate(y_true, y_pred).macro.f1;
}

double binary_auc(std::span<const double> scores, std::span<const int> positive) {
    if (scores.size() != positive.size()) {
        throw invalid_argument("score and label counts differ");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto P = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
    const double N = static_cast<double>(scores.size()) - P;
    if (P == 0.0 || N == 0.0) {
        throw invalid_argument("auc needs both positive and negative samples");
    }
    double area = 0.0;
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        double dtp = 0.0;
        double dfp = 0.0;
        std::size_t j = i;
        for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j) {
            (positive[order[j]] == 1 ? dtp : dfp) += 1.0;
        }
        area += dfp * (tp + 0.5 * dtp);
        tp += dtp;
        fp += dfp;
        i = j;
    }
    return area / (P * N);
}

RocReport roc_auc_ovr(std::span<const int> y_true, const Matrix &proba, std::span<const int> classes) {
    if (proba.rows() != y_true.size() || proba.cols() != classes.size()) {
        throw invalid_argument("probability matrix shape does not match labels and classes");
    }
    for (std::size_t i = 0; i < proba.rows(); ++i) {
        const auto row = proba.row(i);
        if (std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) > 1e-6) {
            throw invalid_argument("probability row " + std::to_string(i) + " does not sum to 1");
        }
    }
    RocReport report;
    const std::size_t n = y_true.size();
    std::vector<std::size_t> order(n);
    std::vector<int> positive(n);
    std::vector<double> scores(n);
    double auc_sum = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        RocCurve curve;
        curve.label = classes[c];
        double P = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            positive[i] = y_true[i] == classes[c] ? 1 : 0;
            scores[i] = proba(i, c);
            P += positive[i];
        }
        const double N = static_cast<double>(n) - P;
        curve.present = P > 0.0 && N > 0.0;
        if (curve.present) {
            std::iota(order.begin(), order.end(), std::size_t{ 0 });
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
            curve.fpr.push_back(0.0);
            curve.tpr.push_back(0.0);
            double tp = 0.0;
            double fp = 0.0;
            for (std::size_t i = 0; i < n;) {
                std::size_t j = i;
                for (; j < n && scores[order[j]] == scores[order[i]]; ++j) {
                    (positive[order[j]] == 1 ? tp : fp) += 1.0;
                }
                curve.thresholds.push_back(scores[order[i]]);
                curve.fpr.push_back(fp / N);
                curve.tpr.push_back(tp / P);
                i = j;
            }
            for (std::size_t k = 1; k < curve.fpr.size(); ++k) {
                curve.auc += (curve.fpr[k] - curve.fpr[k - 1]) * 0.5 * (curve.tpr[k] + curve.tpr[k - 1]);
            }
            auc_sum += curve.auc;
            ++report.scored_classes;
        }
        report.per_class.push_back(std::move(curve));
    }
    report.macro_auc = report.scored_classes > 0 ? auc_sum / static_cast<double>(report.scored_classes) : 0.0;
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const auto &m : per_class) {
        per.push_back({ { "label", m.label }, { "precision", m.precision }, { "recall", m.recall }, { "f1", m.f1 }, { "support", m.support } });
    }
    nlohmann::json j{
        { "classes", classes },
        { "confusion", confusion },
        { "per_class", per },
        { "macro", averages_json(macro) },
        { "weighted", averages_json(weighted) },
        { "accuracy", accuracy },
        { "sample_count", sample_count },
    };
    if (roc) {
        nlohmann::json curves = nlohmann::json::array();
        for (const auto &c : roc->per_class) {
            nlohmann::json jc{ { "label", c.label }, { "present", c.present } };
            if (c.present) {
                jc["auc"] = c.auc;
                jc["fpr"] = c.fpr;
                jc["tpr"] = c.tpr;
            }
            curves.push_back(std::move(jc));
        }
        j["roc"] = { { "macro_auc", roc->macro_auc }, { "per_class", curves } };
    }
    return j;
}

std::string EvalReport::to_csv() const {
    std::string out = "row,precision,recall,f1,support\n";
    for (const auto &m : per_class) {
        out += fmt::format("{},{},{},{},{}\n", m.label, m.precision, m.recall, m.f1, m.support);
    }
    out += fmt::format("macro,{},{},{},{}\n", macro.precision, macro.recall, macro.f1, sample_count);
    out += fmt::format("weighted,{},{},{},{}\n", weighted.precision, weighted.recall, weighted.f1, sample_count);
    out += fmt::format("accuracy,,,{},{}\n", accuracy, sample_count);
    if (roc) {
        out += fmt::format("macro_auc,,,{},{}\n", roc->macro_auc, sample_count);
    }
    return out;
}

RunAggregate aggregate_runs(std::span<const double> scores) {
    if (scores.empty()) {
        throw invalid_argument("aggregate_runs needs at least one score");
    }
    RunAggregate a;
    a.scores.assign(scores.begin(), scores.end());
    a.count = scores.size();
    const auto n = static_cast<double>(a.count);
    a.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double ss = 0.0;
    for (const double s : scores) {
        ss += (s - a.mean) * (s - a.mean);
    }
    a.std = std::sqrt(ss / n);
    a.sample_std = a.count > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    a.min = *lo;
    a.max = *hi;
    // guard the mean against rounding just outside [min, max]
    a.mean = std::clamp(a.mean, a.min, a.max);
    return a;
}

nlohmann::json RunAggregate::to_json() const {
    return { { "scores", scores }, { "mean", mean }, { "std", std }, { "sample_std", sample_std }, { "min", min }, { "max", max }, { "count", count } };
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw invalid_argument("spearman_rho needs two equal-length series of at least 2 values");
    }
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

std::string DecisionGrid::to_csv() const {
    std::string out = fmt::format("x{},x{},label\n", feature_x, feature_y);
    for (std::size_t iy = 0; iy < y.size(); ++iy) {
        for (std::size_t ix = 0; ix < x.size(); ++ix) {
            out += fmt::format("{},{},{}\n", x[ix], y[iy], at(ix, iy));
        }
    }
    return out;
}

DecisionGrid decision_grid(const Predictor &predict, std::span<const double> base_point, std::size_t fx, std::size_t fy, const GridBounds &bounds, std::size_t resolution) {
    if (resolution < 2) {
        throw invalid_argument("grid resolution must be at least 2");
    }
    if (fx >= base_point.size() || fy >= base_point.size() || fx == fy) {
        throw invalid_argument("grid feature indices must be distinct and below " + std::to_string(base_point.size()));
    }
    DecisionGrid g;
    g.feature_x = fx;
    g.feature_y = fy;
    const auto steps = static_cast<double>(resolution - 1);
    for (std::size_t k = 0; k < resolution; ++k) {
        g.x.push_back(bounds.x_low + (bounds.x_high - bounds.x_low) * static_cast<double>(k) / steps);
        g.y.push_back(bounds.y_low + (bounds.y_high - bounds.y_low) * static_cast<double>(k) / steps);
    }
    Matrix points(resolution * resolution, base_point.size());
    for (std::size_t iy = 0; iy < resolution; ++iy) {
        for (std::size_t ix = 0; ix < resolution; ++ix) {
            auto row = points.row(iy * resolution + ix);
            std::copy(base_point.begin(), base_point.end(), row.begin());
            row[fx] = g.x[ix];
            row[fy] = g.y[iy];
        }
    }
    g.labels = predict(points);
    if (g.labels.size() != points.rows()) {
        throw invalid_argument("predictor returned the wrong number of labels");
    }
    return g;
}

}  // namespace driftml::metrics
