#include "tholo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tholo {

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat operator*(const Mat& x, const Mat& y) {
    if (x.cols() != y.rows()) throw std::invalid_argument("Mat multiply: shape mismatch");
    Mat r(x.rows(), y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t k = 0; k < x.cols(); ++k) {
            double v = x(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < y.cols(); ++j) r(i, j) += v * y(k, j);
        }
    return r;
}

Mat operator+(const Mat& x, const Mat& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw std::invalid_argument("Mat add: shape mismatch");
    Mat r = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) r(i, j) += y(i, j);
    return r;
}

Mat operator-(const Mat& x, const Mat& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw std::invalid_argument("Mat sub: shape mismatch");
    Mat r = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) r(i, j) -= y(i, j);
    return r;
}

namespace {

// LU with partial pivoting; returns permutation sign, 0 if singular.
int lu_decompose(Mat& a, std::vector<std::size_t>& perm) {
    const std::size_t n = a.rows();
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    int sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::fabs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a(i, k)) > best) { best = std::fabs(a(i, k)); p = i; }
        if (best == 0.0) return 0;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(perm[k], perm[p]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            a(i, k) /= a(k, k);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= a(i, k) * a(k, j);
        }
    }
    return sign;
}

} // namespace

double lu_det(const Mat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("lu_det: square matrix required");
    if (m.rows() == 0) return 1.0;
    Mat a = m;
    std::vector<std::size_t> perm;
    int sign = lu_decompose(a, perm);
    if (sign == 0) return 0.0;
    double det = sign;
    for (std::size_t i = 0; i < a.rows(); ++i) det *= a(i, i);
    return det;
}

std::vector<double> lu_solve(const Mat& m, const std::vector<double>& b) {
    const std::size_t n = m.rows();
    if (m.cols() != n || b.size() != n) throw std::invalid_argument("lu_solve: shape mismatch");
    Mat a = m;
    std::vector<std::size_t> perm;
    if (lu_decompose(a, perm) == 0) throw std::runtime_error("lu_solve: singular matrix");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= a(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

Mat inverse(const Mat& m) {
    const std::size_t n = m.rows();
    Mat inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        std::vector<double> col = lu_solve(m, e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

std::vector<double> symmetric_eigenvalues(const Mat& m) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw std::invalid_argument("symmetric_eigenvalues: square matrix required");
    Mat a = m;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

Mat cholesky(const Mat& m) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw std::invalid_argument("cholesky: square matrix required");
    Mat l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

bool is_positive_definite(const Mat& m) {
    try {
        cholesky(m);
        return true;
    } catch (const std::runtime_error&) {
        return false;
    }
}

} // namespace tholo
