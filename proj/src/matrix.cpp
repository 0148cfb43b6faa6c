#include "spanqa/matrix.hpp"

#include <cmath>

#include "spanqa/errors.hpp"

namespace spanqa {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double* crow = c.data() + static_cast<std::size_t>(i) * c.cols();
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data() + static_cast<std::size_t>(k) * b.cols();
            for (int j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: inner dims " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * a.cols();
        for (int j = 0; j < b.rows(); ++j) {
            const double* brow = b.data() + static_cast<std::size_t>(j) * b.cols();
            double sum = 0.0;
            for (int k = 0; k < a.cols(); ++k) sum += arow[k] * brow[k];
            c(i, j) = sum;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: inner dims " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
    }
    Matrix c(a.cols(), b.cols());
    for (int k = 0; k < a.rows(); ++k) {
        const double* arow = a.data() + static_cast<std::size_t>(k) * a.cols();
        const double* brow = b.data() + static_cast<std::size_t>(k) * b.cols();
        for (int i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data() + static_cast<std::size_t>(i) * c.cols();
            for (int j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

void add_scaled(Matrix& dst, const Matrix& src, double alpha) {
    if (!dst.same_shape(src)) throw ShapeError("add_scaled: shape mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

bool all_finite(const Matrix& a) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace spanqa
