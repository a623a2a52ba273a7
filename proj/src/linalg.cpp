#include "riskgrad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "riskgrad/errors.hpp"

namespace riskgrad {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector mat_vec(const Matrix& a, const Vector& x) {
    Vector y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        const double* row = a.row(i);
        double acc = 0.0;
        for (int j = 0; j < a.cols(); ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

Vector vec_mat(const Vector& x, const Matrix& a) {
    Vector y(a.cols(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        const double* row = a.row(i);
        const double xi = x[i];
        for (int j = 0; j < a.cols(); ++j) y[j] += xi * row[j];
    }
    return y;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            double* crow = c.row(i);
            for (int j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

double dot(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm_inf(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm2(const Vector& v) {
    return std::sqrt(dot(v, v));
}

Vector& axpy(Vector& y, double alpha, const Vector& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
    return y;
}

Vector solve_linear(Matrix a, Vector b) {
    const int n = a.rows();
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a(col, col));
        for (int i = col + 1; i < n; ++i) {
            const double v = std::abs(a(i, col));
            if (v > best) {
                best = v;
                pivot = i;
            }
        }
        if (!(best > 0.0) || !std::isfinite(best)) {
            throw SingularSystem("linear solve: zero or non-finite pivot at column " +
                                 std::to_string(col));
        }
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a(col, col);
        for (int i = col + 1; i < n; ++i) {
            const double f = a(i, col) * inv;
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a(i, j) -= f * a(col, j);
            b[i] -= f * b[col];
        }
    }
    Vector x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double acc = b[i];
        for (int j = i + 1; j < n; ++j) acc -= a(i, j) * x[j];
        x[i] = acc / a(i, i);
    }
    return x;
}

namespace {

double norm_inf_mat(const Matrix& m) {
    double best = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

double spectral_radius(const Matrix& b) {
    const int n = b.rows();
    if (n == 0) return 0.0;
    double norm = norm_inf_mat(b);
    if (norm == 0.0) return 0.0;

    // Track r_k = ln(||B^(2^k)||) / 2^k; it converges to ln(rho).
    Matrix t = b;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) /= norm;
    double r = std::log(norm);
    double weight = 1.0;  // 1 / 2^k for the next correction
    for (int k = 0; k < 60; ++k) {
        t = mat_mul(t, t);
        const double d = norm_inf_mat(t);
        if (d == 0.0) return 0.0;  // nilpotent (or fully decayed)
        weight *= 0.5;
        r += weight * std::log(d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t(i, j) /= d;
    }
    return std::exp(r);
}

}  // namespace riskgrad
