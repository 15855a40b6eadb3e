#pragma once

#include <cstddef>
#include <vector>

namespace tholo {

// Dense row-major matrix. Everything in this project is desk scale
// (n <= ~10), so a plain vector with LU/Jacobi routines is all we need.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Mat identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Mat transposed() const;

    friend Mat operator*(const Mat& x, const Mat& y);
    friend Mat operator+(const Mat& x, const Mat& y);
    friend Mat operator-(const Mat& x, const Mat& y);

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Determinant by LU with partial pivoting.
double lu_det(const Mat& m);

// Solve m x = b; throws std::runtime_error on (numerically) singular input.
std::vector<double> lu_solve(const Mat& m, const std::vector<double>& b);

Mat inverse(const Mat& m);

// Eigenvalues of a symmetric matrix, ascending (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(const Mat& m);

// Cholesky factor L with m = L L^T; throws if m is not positive definite.
Mat cholesky(const Mat& m);

bool is_positive_definite(const Mat& m);

} // namespace tholo
