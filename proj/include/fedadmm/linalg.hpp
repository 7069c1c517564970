#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace fedadmm {

using Vector = std::vector<double>;

// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n, double scale = 1.0);
    static Matrix diagonal(const Vector& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    double* row(std::size_t i) { return data_.data() + i * cols_; }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& o) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);
double norm_sq(const Vector& a);
double norm_inf(const Vector& a);
double dist_sq(const Vector& a, const Vector& b);
// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scaled(double alpha, const Vector& a);
bool all_finite(const Vector& a);

Vector multiply(const Matrix& m, const Vector& v);
// m^T v
Vector multiply_transposed(const Matrix& m, const Vector& v);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
// A^T A, mirrored so the result is exactly symmetric
Matrix gram(const Matrix& a);
Matrix scaled(double alpha, const Matrix& m);
// alpha * m + shift * I
Matrix shifted(const Matrix& m, double alpha, double shift);

// Throws NotSymmetric when asymmetry exceeds 1e-12 relative to the largest entry.
void require_symmetric(const Matrix& m);

class Cholesky {
public:
    Cholesky() = default;
    explicit Cholesky(const Matrix& m);

    Vector solve(const Vector& v) const;
    std::size_t size() const { return n_; }

private:
    std::size_t n_ = 0;
    Matrix l_;
};

Vector spd_solve(const Matrix& m, const Vector& v);

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double lambda_max(const Matrix& m);

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors
};

// Cyclic Jacobi; used for minimum-norm fallbacks.
SymmetricEigen symmetric_eigen(const Matrix& m);

}  // namespace fedadmm
