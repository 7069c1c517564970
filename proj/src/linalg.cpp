#include "fedadmm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedadmm/errors.hpp"

namespace fedadmm {

namespace {

void check_same(std::size_t a, std::size_t b, const char* where) {
    if (a != b)
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(where) + " (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        check_same(r.size(), cols_, "ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n, double scale) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
    return m;
}

Matrix Matrix::diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

double dot(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_sq(const Vector& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

double norm_inf(const Vector& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

double dist_sq(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "dist_sq");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

void axpy(double alpha, const Vector& x, Vector& y) {
    check_same(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector add(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector sub(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "sub");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector scaled(double alpha, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i];
    return r;
}

bool all_finite(const Vector& a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Vector multiply(const Matrix& m, const Vector& v) {
    check_same(m.cols(), v.size(), "matrix-vector product");
    Vector r(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * v[j];
        r[i] = s;
    }
    return r;
}

Vector multiply_transposed(const Matrix& m, const Vector& v) {
    check_same(m.rows(), v.size(), "transposed product");
    Vector r(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] += row[j] * v[i];
    }
    return r;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    check_same(a.cols(), b.rows(), "matrix product");
    Matrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix gram(const Matrix& a) {
    const std::size_t n = a.cols();
    Matrix g(n, n);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.row(r);
        for (std::size_t i = 0; i < n; ++i) {
            double ri = row[i];
            if (ri == 0.0) continue;
            for (std::size_t j = i; j < n; ++j) g(i, j) += ri * row[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

Matrix scaled(double alpha, const Matrix& m) {
    Matrix r = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) *= alpha;
    return r;
}

Matrix shifted(const Matrix& m, double alpha, double shift) {
    check_same(m.rows(), m.cols(), "shifted needs a square matrix");
    Matrix r = scaled(alpha, m);
    for (std::size_t i = 0; i < m.rows(); ++i) r(i, i) += shift;
    return r;
}

void require_symmetric(const Matrix& m) {
    check_same(m.rows(), m.cols(), "square matrix expected");
    double scale = 0.0;
    for (double v : m.data()) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * scale;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol)
                throw Error(ErrorCode::NotSymmetric,
                            "entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
}

Cholesky::Cholesky(const Matrix& m) : n_(m.rows()), l_(m.rows(), m.rows()) {
    require_symmetric(m);
    for (std::size_t j = 0; j < n_; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
        if (!(d > 0.0))
            throw Error(ErrorCode::FactorizationFailure, "pivot " + std::to_string(j) + " is " + std::to_string(d));
        const double ljj = std::sqrt(d);
        l_(j, j) = ljj;
        for (std::size_t i = j + 1; i < n_; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
            l_(i, j) = s / ljj;
        }
    }
}

Vector Cholesky::solve(const Vector& v) const {
    check_same(v.size(), n_, "cholesky solve");
    Vector z(v);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = z[i];
        for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * z[k];
        z[i] = s / l_(i, i);
    }
    for (std::size_t i = n_; i-- > 0;) {
        double s = z[i];
        for (std::size_t k = i + 1; k < n_; ++k) s -= l_(k, i) * z[k];
        z[i] = s / l_(i, i);
    }
    return z;
}

Vector spd_solve(const Matrix& m, const Vector& v) {
    return Cholesky(m).solve(v);
}

namespace {

// Returns the Rayleigh quotient after convergence, or -1 if the start vector is annihilated.
double power_iterate(const Matrix& m, Vector v) {
    constexpr int cap = 10000;
    double nv = std::sqrt(norm_sq(v));
    for (double& x : v) x /= nv;
    Vector w = multiply(m, v);
    if (norm_sq(w) == 0.0) return -1.0;
    double rq = dot(v, w);
    for (int it = 0; it < cap; ++it) {
        double nw = std::sqrt(norm_sq(w));
        if (nw == 0.0) return 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
        w = multiply(m, v);
        double next = dot(v, w);
        if (std::abs(next - rq) <= 1e-10 * std::max(1.0, std::abs(next))) return next;
        rq = next;
    }
    throw Error(ErrorCode::NoConvergence, "power iteration hit 10000 iterations");
}

}  // namespace

double lambda_max(const Matrix& m) {
    require_symmetric(m);
    const std::size_t n = m.rows();
    if (n == 0) return 0.0;
    if (std::all_of(m.data().begin(), m.data().end(), [](double x) { return x == 0.0; })) return 0.0;
    double lam = power_iterate(m, Vector(n, 1.0));
    for (std::size_t j = 0; lam < 0.0 && j < n; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        lam = power_iterate(m, e);
    }
    return std::max(lam, 0.0);
}

SymmetricEigen symmetric_eigen(const Matrix& m) {
    require_symmetric(m);
    const std::size_t n = m.rows();
    Matrix a = m;
    Matrix v = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a(i, j) * a(i, j);
                if (i != j) off += a(i, j) * a(i, j);
            }
        if (off <= 1e-30 * std::max(total, 1e-300)) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::FactorizationFailure: return "FactorizationFailure";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::LabelDomain: return "LabelDomain";
        case ErrorCode::InvalidMode: return "InvalidMode";
        case ErrorCode::InvalidGroups: return "InvalidGroups";
        case ErrorCode::InvalidRange: return "InvalidRange";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::TooManyClients: return "TooManyClients";
        case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
        case ErrorCode::InnerSolveFailure: return "InnerSolveFailure";
        case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::HypothesisViolation: return "HypothesisViolation";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Error";
}

}  // namespace fedadmm
