#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dccc {

// Error taxonomy used across the library. Configuration problems are the
// caller's fault, contract violations are a programming error at the call
// site, numerical degeneracy means the math itself broke down.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};
// Raised when an epoch cannot proceed (e.g. fewer clusters than the sampler needs).
struct DegenerateEpochError : std::runtime_error {
    explicit DegenerateEpochError(const std::string& what) : std::runtime_error(what) {}
};

// All randomness in the library flows through this engine type.
using Rng = std::mt19937_64;

// Dense row-major f64 matrix. Deliberately minimal: the library's linear
// algebra is small enough that explicit loops stay auditable.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// N x D matrix whose rows are L2-normalized embeddings.
using FeatureMatrix = Matrix;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    return all_finite(std::span<const double>(m.data().data(), m.data().size()));
}

} // namespace dccc
