#pragma once

#include <cstddef>
#include <vector>

#include "spanqa/rng.hpp"

namespace spanqa {

// Dense row-major matrix of doubles. All model math runs in double precision
// so finite-difference checks and checkpoint round-trips are exact.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols, 0.0); }

    static Matrix uniform(int rows, int cols, double lo, double hi, Rng& rng) {
        Matrix m(rows, cols);
        for (auto& v : m.data_) v = rng.uniform(lo, hi);
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(double v) { data_.assign(data_.size(), v); }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);

// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// In-place: dst += src (same shape) — scaled by alpha.
void add_scaled(Matrix& dst, const Matrix& src, double alpha = 1.0);

Matrix transpose(const Matrix& a);

double max_abs(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace spanqa
