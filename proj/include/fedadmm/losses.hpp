#pragma once

#include "fedadmm/data.hpp"
#include "fedadmm/linalg.hpp"

namespace fedadmm {

enum class LossFamily { LeastSquares, Logistic };

struct LossModel {
    LossFamily family = LossFamily::LeastSquares;
    double mu = 0.0;  // logistic ridge weight

    static LossModel least_squares() { return {LossFamily::LeastSquares, 0.0}; }
    static LossModel logistic(double mu) { return {LossFamily::Logistic, mu}; }
};

enum class CurvatureKind { ScalarLipschitz, ScaledGram, FullGram };

struct CurvatureMode {
    CurvatureKind kind = CurvatureKind::ScalarLipschitz;
    double r = 6.0;  // ScaledGram divisor

    static CurvatureMode scalar() { return {CurvatureKind::ScalarLipschitz, 0.0}; }
    static CurvatureMode scaled_gram(double r = 6.0) { return {CurvatureKind::ScaledGram, r}; }
    static CurvatureMode full_gram() { return {CurvatureKind::FullGram, 0.0}; }
};

// Throws LabelDomain / InvalidMode on bad combinations.
void validate(const LossModel& model, const ClientDataset& data);
void validate(const LossModel& model, const CurvatureMode& mode);

double loss_value(const LossModel& model, const ClientDataset& data, const Vector& x);
Vector loss_gradient(const LossModel& model, const ClientDataset& data, const Vector& x);
Matrix loss_hessian(const LossModel& model, const ClientDataset& data, const Vector& x);
double lipschitz_constant(const LossModel& model, const ClientDataset& data);
// r is the client's Lipschitz constant, reused for ScalarLipschitz.
Matrix curvature_matrix(const LossModel& model, const ClientDataset& data, const CurvatureMode& mode, double r);
Matrix curvature_matrix(const LossModel& model, const ClientDataset& data, const CurvatureMode& mode);

// log(1 + e^t) without overflow
double softplus(double t);
double sigmoid(double t);

}  // namespace fedadmm
