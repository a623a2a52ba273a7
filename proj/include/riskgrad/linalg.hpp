#pragma once

// Small dense linear algebra layer. Chains in this project are desk scale
// (n <= 64 states), so everything is row-major dense with no external
// dependencies.

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace riskgrad {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix identity(int n);

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }

    const std::vector<double>& data() const { return data_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Vector mat_vec(const Matrix& a, const Vector& x);
Vector vec_mat(const Vector& x, const Matrix& a);  // x^T A
Matrix mat_mul(const Matrix& a, const Matrix& b);

double dot(const Vector& a, const Vector& b);
double norm_inf(const Vector& v);
double norm2(const Vector& v);
Vector& axpy(Vector& y, double alpha, const Vector& x);  // y += alpha*x

// Solves A x = b by Gaussian elimination with partial pivoting.
// Throws SingularSystem when a pivot collapses.
Vector solve_linear(Matrix a, Vector b);

// Spectral radius of a nonnegative matrix via normalized repeated squaring:
// rho = lim ||B^(2^k)||^(1/2^k). Robust for reducible and nilpotent inputs,
// which rules out plain power iteration here.
double spectral_radius(const Matrix& b);

}  // namespace riskgrad
