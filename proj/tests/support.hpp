// Test helpers and independent oracles. Nothing here calls into the code under test
// except the Matrix container.
#ifndef DRIFTML_TESTS_SUPPORT_HPP
#define DRIFTML_TESTS_SUPPORT_HPP

#include "driftml/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace driftml::testing {

inline Matrix make_matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data().begin());
    return m;
}

/// `per_class` Gaussian points around class centers spaced `spread` apart on the diagonal.
struct Toy {
    Matrix X;
    std::vector<int> y;
};

inline Toy gaussian_toy(std::size_t per_class, int classes, std::size_t dim, double spread, double noise, std::uint64_t seed) {
    std::mt19937_64 rng{ seed };
    std::normal_distribution<double> n01{ 0.0, 1.0 };
    Toy t{ Matrix(per_class * static_cast<std::size_t>(classes), dim), {} };
    std::size_t r = 0;
    for (int c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i, ++r) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double center = spread * std::cos(2.0 * 3.141592653589793 * c / classes + static_cast<double>(j));
                t.X(r, j) = center + noise * n01(rng);
            }
            t.y.push_back(c + 1);
        }
    }
    return t;
}

// ---- metric oracles -------------------------------------------------------

struct CountOracle {
    std::vector<int> classes;
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<double> precision, recall, f1;
    std::vector<std::size_t> support;
    double macro_f1{ 0 };
    double weighted_f1{ 0 };
    double accuracy{ 0 };
};

/// Pair-by-pair counting with the zero-denominator convention (undefined ratio = 0).
inline CountOracle count_oracle(const std::vector<int> &t, const std::vector<int> &p) {
    CountOracle o;
    for (int v : t) {
        if (std::find(o.classes.begin(), o.classes.end(), v) == o.classes.end()) o.classes.push_back(v);
    }
    for (int v : p) {
        if (std::find(o.classes.begin(), o.classes.end(), v) == o.classes.end()) o.classes.push_back(v);
    }
    std::sort(o.classes.begin(), o.classes.end());
    const std::size_t C = o.classes.size();
    o.confusion.assign(C, std::vector<std::size_t>(C, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t a = 0; a < C; ++a) {
            for (std::size_t b = 0; b < C; ++b) {
                if (t[i] == o.classes[a] && p[i] == o.classes[b]) ++o.confusion[a][b];
            }
        }
        if (t[i] == p[i]) ++correct;
    }
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const bool is_t = t[i] == o.classes[c];
            const bool is_p = p[i] == o.classes[c];
            tp += is_t && is_p;
            fp += !is_t && is_p;
            fn += is_t && !is_p;
        }
        const double prec = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        const double rec = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        const double f = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
        o.precision.push_back(prec);
        o.recall.push_back(rec);
        o.f1.push_back(f);
        o.support.push_back(tp + fn);
        o.macro_f1 += f / double(C);
        o.weighted_f1 += f * double(tp + fn) / double(t.size());
    }
    o.accuracy = double(correct) / double(t.size());
    return o;
}

/// Mann-Whitney statistic over all positive/negative pairs, ties counted one half.
inline double pairwise_auc(const std::vector<double> &scores, const std::vector<int> &positive) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) continue;
            pairs += 1.0;
            wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

// ---- linear algebra oracle -------------------------------------------------

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: (eigenvalues descending, eigenvectors as columns).
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
    std::vector<double> values;
    std::vector<std::vector<double>> vectors(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        values.push_back(a[order[k]][order[k]]);
        for (std::size_t i = 0; i < n; ++i) vectors[i][k] = v[i][order[k]];
    }
    return { values, vectors };
}

// ---- calculus oracle --------------------------------------------------------

/// Central finite-difference gradient of f at x.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double> &)> &f, std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// max_i |a_i - b_i| / max(1, max_i |b_i|)
inline double relative_error(const std::vector<double> &a, const std::vector<double> &b) {
    double diff = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return diff / scale;
}

// ---- network oracle -------------------------------------------------------

/// Plain-loop forward pass of a dense network with the packing W_l (fan_in x fan_out row-major), then b_l.
inline std::vector<std::vector<double>> mlp_forward_oracle(const std::vector<std::size_t> &layers, bool use_tanh, const std::vector<double> &params, const Matrix &X) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        std::vector<double> a(X.row(r).begin(), X.row(r).end());
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
            const std::size_t fi = layers[l], fo = layers[l + 1];
            std::vector<double> z(fo, 0.0);
            for (std::size_t j = 0; j < fo; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < fi; ++i) s += a[i] * params[offset + i * fo + j];
                z[j] = s + params[offset + fi * fo + j];
            }
            offset += fi * fo + fo;
            const bool last = l + 2 == layers.size();
            if (!last) {
                for (auto &v : z) v = use_tanh ? std::tanh(v) : std::max(0.0, v);
            } else {
                const double m = *std::max_element(z.begin(), z.end());
                double total = 0.0;
                for (auto &v : z) total += (v = std::exp(v - m));
                for (auto &v : z) v /= total;
            }
            a = std::move(z);
        }
        out.push_back(a);
    }
    return out;
}

}  // namespace driftml::testing

#endif  // DRIFTML_TESTS_SUPPORT_HPP
