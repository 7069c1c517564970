#pragma once

#include <cstdint>
#include <vector>

#include "fedadmm/data.hpp"
#include "fedadmm/fedcore.hpp"
#include "fedadmm/losses.hpp"

namespace fedadmm {

struct ResidualTriple {
    double dual = 0.0;       // sum |g_i + pi_i|^2
    double primal = 0.0;     // sum |x_i - y|^2
    double consensus = 0.0;  // |sum pi_i|^2

    double max() const;
};

struct TraceRecord {
    std::int64_t k = 0;
    bool in_K = false;
    double f_y = 0.0;
    double F_X = 0.0;
    double L = 0.0;
    double phi = 0.0;
    double grad_f_sq = 0.0;
    double grad_F_sq = 0.0;
    ResidualTriple residuals;
    std::int64_t rounds = 0;
    double elapsed_s = 0.0;
    // step lengths into this record; zero for k = 0
    double dy_sq = 0.0;
    std::vector<double> dx_sq;
};

// f(y) = sum w_i f_i(y)
double federated_objective(const LossModel& model, const Federation& fed, const Vector& y);
Vector federated_gradient(const LossModel& model, const Federation& fed, const Vector& y);
// F(X) = sum w_i f_i(x_i)
double local_objective(const LossModel& model, const Federation& fed, const std::vector<ClientState>& clients);

double lagrangian(const std::vector<ClientState>& clients, const Vector& y, const LossModel& model, const Federation& fed);
// uses the cached g_i of each state
ResidualTriple residuals(const std::vector<ClientState>& clients, const Vector& y);
bool should_stop(const ResidualTriple& res, std::size_t n, std::size_t d, double tol_scale = 1e-7);
double stop_threshold(std::size_t n, std::size_t d, double tol_scale);

struct OracleResult {
    Vector x;
    double f = 0.0;
    bool min_norm_fallback = false;
};

OracleResult oracle_optimum(const Federation& fed, const LossModel& model);

// Per-client constants the convergence bounds are stated in.
struct RateInputs {
    std::vector<double> w, r, sigma;
    std::int64_t k0 = 1;

    std::size_t m() const { return w.size(); }
};

enum class Variant { CEADMM, ICEADMM };

double theta(double w, double r, double sigma);     // sigma - w r - 2 w^2 r^2 / sigma
double vartheta(double w, double r, double sigma);  // sigma - 18 w^2 r^2 / sigma

struct RatePoint {
    std::int64_t k = 0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct RateReport {
    double rho = 0.0;
    double varrho = 0.0;
    std::vector<RatePoint> bound_satisfied_at;
    std::vector<RatePoint> violations;
};

RateReport check_rate_bound(const std::vector<TraceRecord>& trace, const RateInputs& in, double f_star, Variant variant);

struct Violation {
    std::int64_t k = 0;  // the step k -> k+1
    double lhs = 0.0;
    double rhs = 0.0;
};

// L^{k+1} - L^k <= -(sigma/2)|dy|^2 - sum (theta_i/2)|dx_i|^2 + slack
std::vector<Violation> check_descent_lemma(const std::vector<TraceRecord>& trace, const RateInputs& in,
                                           double slack = 1e-8, std::int64_t from_k = 0);
// phi^{k+1} <= phi^k + slack for k >= from_k
std::vector<Violation> check_lyapunov(const std::vector<TraceRecord>& trace, double slack = 1e-10, std::int64_t from_k = 1);
// L^k >= f(y^k) >= f* up to slack
std::vector<Violation> check_sandwich(const std::vector<TraceRecord>& trace, double f_star, double slack = 1e-8,
                                      std::int64_t from_k = 0);

}  // namespace fedadmm
