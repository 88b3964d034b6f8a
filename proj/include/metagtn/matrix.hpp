#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metagtn/parallel.hpp"

namespace metagtn {

// Dense row-major matrix of doubles. Small helper for score tables, features,
// layer weights, and the dense oracle; not a general linear algebra library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    void require_same_shape(const Matrix& other, const std::string& what) const {
        if (!same_shape(other)) {
            throw std::invalid_argument(what + ": shape mismatch (" + std::to_string(rows_) + "x" +
                                        std::to_string(cols_) + " vs " + std::to_string(other.rows_) +
                                        "x" + std::to_string(other.cols_) + ")");
        }
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B. Row-blocked; each output row is a fixed-order accumulation, so
// results are bitwise identical for any worker count.
inline Matrix matmul(const Matrix& a, const Matrix& b, int workers = 1) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols());
    parallel_blocks(a.rows(), workers, [&](int, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* out = c.data() + i * c.cols();
            for (std::size_t k = 0; k < a.cols(); ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                const double* brow = b.data() + k * b.cols();
                for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
            }
        }
    });
    return c;
}

// C = A^T * B where A is (k x r) and B is (k x c).
inline Matrix matmul_transpose_a(const Matrix& a, const Matrix& b, int workers = 1) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("matmul_transpose_a: row counts differ");
    }
    Matrix c(a.cols(), b.cols());
    // Parallelize over output rows (columns of A) to stay race-free.
    parallel_blocks(a.cols(), workers, [&](int, std::size_t lo, std::size_t hi) {
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double* arow = a.data() + k * a.cols();
            const double* brow = b.data() + k * b.cols();
            for (std::size_t i = lo; i < hi; ++i) {
                const double aki = arow[i];
                if (aki == 0.0) continue;
                double* out = c.data() + i * c.cols();
                for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aki * brow[j];
            }
        }
    });
    return c;
}

// C = A * B^T where A is (r x k) and B is (c x k).
inline Matrix matmul_transpose_b(const Matrix& a, const Matrix& b, int workers = 1) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("matmul_transpose_b: column counts differ");
    }
    Matrix c(a.rows(), b.rows());
    parallel_blocks(a.rows(), workers, [&](int, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* arow = a.data() + i * a.cols();
            for (std::size_t j = 0; j < b.rows(); ++j) {
                const double* brow = b.data() + j * b.cols();
                double sum = 0.0;
                for (std::size_t k = 0; k < a.cols(); ++k) sum += arow[k] * brow[k];
                c(i, j) = sum;
            }
        }
    });
    return c;
}

}  // namespace metagtn
