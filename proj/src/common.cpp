#include "driftml/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace driftml {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data) :
    rows_{ rows },
    cols_{ cols },
    data_{ std::move(data) } {
    if (data_.size() != rows_ * cols_) {
        throw invalid_argument("matrix data size " + std::to_string(data_.size()) + " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>> &rows) {
    if (rows.empty()) {
        return {};
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) {
            throw invalid_argument("ragged rows: row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) + " columns, expected " + std::to_string(m.cols()));
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) {
            throw invalid_argument("row index " + std::to_string(indices[i]) + " out of range");
        }
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Deadline Deadline::after(double seconds) {
    if (!std::isfinite(seconds)) {
        return Deadline{};
    }
    const auto now = clock::now();
    if (seconds <= 0.0) {
        return Deadline{ now };
    }
    return Deadline{ now + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(seconds)) };
}

Deadline Deadline::earliest(const Deadline &other) const {
    if (unlimited_) {
        return other;
    }
    if (other.unlimited_) {
        return *this;
    }
    return end_ <= other.end_ ? *this : other;
}

double standard_normal(rng_type &rng) noexcept {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t argmax(std::span<const double> values) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

std::vector<int> unique_labels(std::span<const int> labels) {
    std::vector<int> out(labels.begin(), labels.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace driftml
