#ifndef DRIFTML_COMMON_HPP
#define DRIFTML_COMMON_HPP

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftml {

/// Base class of every exception thrown by the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line and column of the offending token.
class parse_error : public error {
  public:
    parse_error(const std::string &what, std::size_t line, std::size_t column)
        : error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_{ line },
          column_{ column } {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

/// A call's arguments violate its precondition (shape mismatch, value out of range, ...).
class invalid_argument : public error {
  public:
    using error::error;
};

/// Run configuration is incomplete or inconsistent.
class config_error : public error {
  public:
    using error::error;
};

/// Raised from inside training when the trial's deadline has passed.
class trial_timeout : public error {
  public:
    trial_timeout() : error("trial deadline exceeded") {}
};

/// Dense row-major matrix of doubles.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_{ rows }, cols_{ cols }, data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix from_rows(const std::vector<std::vector<double>> &rows);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    double &operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return { data_.data() + r * cols_, cols_ }; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept { return { data_.data() + r * cols_, cols_ }; }

    [[nodiscard]] std::vector<double> &data() noexcept { return data_; }
    [[nodiscard]] const std::vector<double> &data() const noexcept { return data_; }

    /// Copy of the given rows, in the given order.
    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix &, const Matrix &) = default;

  private:
    std::size_t rows_{ 0 };
    std::size_t cols_{ 0 };
    std::vector<double> data_;
};

/// Wall-clock deadline polled cooperatively by long-running training loops.
class Deadline {
  public:
    using clock = std::chrono::steady_clock;

    /// A deadline that never expires.
    Deadline() = default;

    static Deadline after(double seconds);
    static Deadline at(clock::time_point end) { return Deadline{ end }; }

    [[nodiscard]] bool unlimited() const noexcept { return unlimited_; }
    [[nodiscard]] bool expired() const noexcept { return !unlimited_ && clock::now() >= end_; }
    [[nodiscard]] clock::time_point end() const noexcept { return end_; }

    /// Throws trial_timeout if expired.
    void check() const {
        if (expired()) {
            throw trial_timeout{};
        }
    }

    /// The earlier of the two deadlines.
    [[nodiscard]] Deadline earliest(const Deadline &other) const;

  private:
    explicit Deadline(clock::time_point end) : end_{ end }, unlimited_{ false } {}

    clock::time_point end_{};
    bool unlimited_{ true };
};

using rng_type = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

/// Uniform in [0, 1) from 53 random bits; identical on every standard library.
[[nodiscard]] inline double uniform01(rng_type &rng) noexcept {
    return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
[[nodiscard]] inline std::size_t uniform_index(rng_type &rng, std::size_t n) noexcept {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Standard normal draw (Box-Muller, one value per call).
[[nodiscard]] double standard_normal(rng_type &rng) noexcept;

/// Fisher-Yates shuffle with the library's own index draws.
template <typename T>
void shuffle(std::vector<T> &values, rng_type &rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng, i);
        std::swap(values[i - 1], values[j]);
    }
}

/// Index of the largest value; ties resolve to the lowest index.
[[nodiscard]] std::size_t argmax(std::span<const double> values) noexcept;

/// Sorted distinct labels.
[[nodiscard]] std::vector<int> unique_labels(std::span<const int> labels);

}  // namespace driftml

#endif  // DRIFTML_COMMON_HPP
