#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace mhquant::stats {

/// Minimal dense row-major matrix for the small systems that show up in the
/// statistics code (normal equations, Fisher information). Sizes here are a
/// handful of covariates, so simplicity beats cleverness.
class Matrix {
public:
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), d_(std::size_t(rows) * cols, 0.0) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return d_[std::size_t(i) * cols_ + j]; }
    double operator()(int i, int j) const { return d_[std::size_t(i) * cols_ + j]; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

private:
    int rows_, cols_;
    std::vector<double> d_;
};

/// Gauss-Jordan inversion with partial pivoting. Returns nullopt when a pivot
/// collapses relative to the matrix magnitude (singular or numerically so).
inline std::optional<Matrix> invert(Matrix a, double rel_tol = 1e-12) {
    const int n = a.rows();
    if (n != a.cols() || n == 0) return std::nullopt;
    Matrix inv = Matrix::identity(n);

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    if (scale == 0.0) return std::nullopt;
    const double tol = scale * rel_tol;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) <= tol) return std::nullopt;
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a(pivot, j), a(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        const double piv = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= piv;
            inv(col, j) /= piv;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a(r, col);
            if (factor == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a(r, j) -= factor * a(col, j);
                inv(r, j) -= factor * inv(col, j);
            }
        }
    }
    return inv;
}

/// Solves A x = b via the inverse (fine at these sizes).
inline std::optional<std::vector<double>> solve(const Matrix& a, const std::vector<double>& b) {
    auto inv = invert(a);
    if (!inv) return std::nullopt;
    const int n = a.rows();
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x[i] += (*inv)(i, j) * b[j];
    return x;
}

}  // namespace mhquant::stats
