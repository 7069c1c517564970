#include "fedadmm/losses.hpp"

#include <cmath>
#include <string>

#include "fedadmm/errors.hpp"

namespace fedadmm {

namespace {

void check_dims(const ClientDataset& data, const Vector& x) {
    if (x.size() != data.features.cols())
        throw Error(ErrorCode::DimensionMismatch,
                    "x has " + std::to_string(x.size()) + " entries, data has " + std::to_string(data.features.cols()) + " features");
    if (data.targets.size() != data.features.rows())
        throw Error(ErrorCode::DimensionMismatch, "targets vs rows");
}

constexpr double kSafety = 1.0 + 1e-6;

}  // namespace

double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return e / (1.0 + e);
}

void validate(const LossModel& model, const ClientDataset& data) {
    if (model.family != LossFamily::Logistic) return;
    if (!(model.mu > 0.0)) throw Error(ErrorCode::InvalidMode, "logistic loss needs mu > 0");
    for (double b : data.targets)
        if (b != 0.0 && b != 1.0)
            throw Error(ErrorCode::LabelDomain, "client " + std::to_string(data.client_id) + " has label " + std::to_string(b));
}

void validate(const LossModel& model, const CurvatureMode& mode) {
    if (mode.kind == CurvatureKind::FullGram && model.family == LossFamily::Logistic)
        throw Error(ErrorCode::InvalidMode, "FullGram is only defined for least squares");
    if (mode.kind == CurvatureKind::ScaledGram) {
        // logistic Hessian is at most A^T A / 4 + mu I
        double floor = model.family == LossFamily::Logistic ? 4.0 + model.mu : 0.0;
        if (!(mode.r > floor))
            throw Error(ErrorCode::InvalidMode, "ScaledGram r=" + std::to_string(mode.r) + " must exceed " + std::to_string(floor));
    }
}

double loss_value(const LossModel& model, const ClientDataset& data, const Vector& x) {
    check_dims(data, x);
    validate(model, data);
    const Matrix& a = data.features;
    const std::size_t di = a.rows();
    double total = 0.0;
    if (model.family == LossFamily::LeastSquares) {
        for (std::size_t r = 0; r < di; ++r) {
            double t = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) t += a(r, j) * x[j];
            t -= data.targets[r];
            total += 0.5 * t * t;
        }
        return total;
    }
    for (std::size_t r = 0; r < di; ++r) {
        double t = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) t += a(r, j) * x[j];
        total += softplus(t) - data.targets[r] * t;
    }
    // per-row ridge term mu/(2 d_i) |x|^2 summed over d_i rows
    return total + 0.5 * model.mu * norm_sq(x);
}

Vector loss_gradient(const LossModel& model, const ClientDataset& data, const Vector& x) {
    check_dims(data, x);
    validate(model, data);
    const Matrix& a = data.features;
    Vector resid(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double t = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) t += a(r, j) * x[j];
        resid[r] = model.family == LossFamily::LeastSquares ? t - data.targets[r] : sigmoid(t) - data.targets[r];
    }
    Vector g = multiply_transposed(a, resid);
    if (model.family == LossFamily::Logistic) axpy(model.mu, x, g);
    return g;
}

Matrix loss_hessian(const LossModel& model, const ClientDataset& data, const Vector& x) {
    check_dims(data, x);
    const Matrix& a = data.features;
    if (model.family == LossFamily::LeastSquares) return gram(a);
    const std::size_t n = a.cols();
    Matrix h(n, n);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.row(r);
        double t = 0.0;
        for (std::size_t j = 0; j < n; ++j) t += row[j] * x[j];
        double s = sigmoid(t);
        double wgt = s * (1.0 - s);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) h(i, j) += wgt * row[i] * row[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        h(i, i) += model.mu;
        for (std::size_t j = 0; j < i; ++j) h(i, j) = h(j, i);
    }
    return h;
}

double lipschitz_constant(const LossModel& model, const ClientDataset& data) {
    if (data.rows() == 0) throw Error(ErrorCode::InvalidRange, "empty client dataset");
    double lam = lambda_max(gram(data.features));
    if (model.family == LossFamily::LeastSquares) return lam * kSafety;
    return (lam / 4.0 + model.mu) * kSafety;
}

Matrix curvature_matrix(const LossModel& model, const ClientDataset& data, const CurvatureMode& mode, double r) {
    validate(model, mode);
    const std::size_t n = data.features.cols();
    switch (mode.kind) {
        case CurvatureKind::ScalarLipschitz: return Matrix::identity(n, r);
        case CurvatureKind::ScaledGram: return scaled(1.0 / mode.r, gram(data.features));
        case CurvatureKind::FullGram: return gram(data.features);
    }
    return {};
}

Matrix curvature_matrix(const LossModel& model, const ClientDataset& data, const CurvatureMode& mode) {
    double r = mode.kind == CurvatureKind::ScalarLipschitz ? lipschitz_constant(model, data) : 0.0;
    return curvature_matrix(model, data, mode, r);
}

}  // namespace fedadmm
