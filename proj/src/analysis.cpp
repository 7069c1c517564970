#include "fedadmm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedadmm/errors.hpp"

namespace fedadmm {

double ResidualTriple::max() const {
    return std::max({dual, primal, consensus});
}

double federated_objective(const LossModel& model, const Federation& fed, const Vector& y) {
    double f = 0.0;
    for (const auto& c : fed.clients) f += c.weight * loss_value(model, c, y);
    return f;
}

Vector federated_gradient(const LossModel& model, const Federation& fed, const Vector& y) {
    Vector g(y.size(), 0.0);
    for (const auto& c : fed.clients) axpy(c.weight, loss_gradient(model, c, y), g);
    return g;
}

double local_objective(const LossModel& model, const Federation& fed, const std::vector<ClientState>& clients) {
    if (clients.size() != fed.m()) throw Error(ErrorCode::DimensionMismatch, "client states vs federation");
    double f = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i)
        f += fed.clients[i].weight * loss_value(model, fed.clients[i], clients[i].x);
    return f;
}

double lagrangian(const std::vector<ClientState>& clients, const Vector& y, const LossModel& model, const Federation& fed) {
    if (clients.size() != fed.m()) throw Error(ErrorCode::DimensionMismatch, "client states vs federation");
    double total = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const auto& c = clients[i];
        Vector diff = sub(c.x, y);
        total += fed.clients[i].weight * loss_value(model, fed.clients[i], c.x) + dot(diff, c.pi) +
                 0.5 * c.sigma * norm_sq(diff);
    }
    return total;
}

ResidualTriple residuals(const std::vector<ClientState>& clients, const Vector& y) {
    ResidualTriple r;
    Vector pi_sum(y.size(), 0.0);
    for (const auto& c : clients) {
        r.dual += norm_sq(add(c.g, c.pi));
        r.primal += dist_sq(c.x, y);
        axpy(1.0, c.pi, pi_sum);
    }
    r.consensus = norm_sq(pi_sum);
    return r;
}

double stop_threshold(std::size_t n, std::size_t d, double tol_scale) {
    // a few ulps so that a residual equal to the decimal threshold still counts as inside it
    return std::sqrt(static_cast<double>(n) * static_cast<double>(d)) * tol_scale *
           (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
}

bool should_stop(const ResidualTriple& res, std::size_t n, std::size_t d, double tol_scale) {
    return res.max() <= stop_threshold(n, d, tol_scale);
}

namespace {

OracleResult least_squares_oracle(const Federation& fed, const LossModel& model) {
    const std::size_t n = fed.n;
    Matrix h(n, n);
    Vector rhs(n, 0.0);
    for (const auto& c : fed.clients) {
        Matrix g = gram(c.features);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) h(i, j) += c.weight * g(i, j);
        axpy(c.weight, multiply_transposed(c.features, c.targets), rhs);
    }
    OracleResult out;
    try {
        out.x = spd_solve(h, rhs);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::FactorizationFailure) throw;
        // minimum-norm solution on the numerical range
        SymmetricEigen eig = symmetric_eigen(h);
        double top = eig.values.empty() ? 0.0 : std::abs(eig.values.back());
        out.x.assign(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            if (eig.values[c] <= 1e-12 * top) continue;
            double proj = 0.0;
            for (std::size_t r = 0; r < n; ++r) proj += eig.vectors(r, c) * rhs[r];
            proj /= eig.values[c];
            for (std::size_t r = 0; r < n; ++r) out.x[r] += proj * eig.vectors(r, c);
        }
        out.min_norm_fallback = true;
    }
    out.f = federated_objective(model, fed, out.x);
    return out;
}

OracleResult logistic_oracle(const Federation& fed, const LossModel& model) {
    const std::size_t n = fed.n;
    Matrix h(n, n);
    for (const auto& c : fed.clients) {
        Matrix g = gram(c.features);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) h(i, j) += c.weight * g(i, j);
    }
    const double lip = (lambda_max(h) / 4.0 + model.mu) * (1.0 + 1e-6);
    OracleResult out;
    out.x.assign(n, 0.0);
    constexpr int cap = 1000000;
    for (int it = 0; it < cap; ++it) {
        Vector g = federated_gradient(model, fed, out.x);
        if (norm_inf(g) <= 1e-12) {
            out.f = federated_objective(model, fed, out.x);
            return out;
        }
        axpy(-1.0 / lip, g, out.x);
    }
    throw Error(ErrorCode::NoConvergence, "logistic oracle did not reach |grad|_inf <= 1e-12");
}

}  // namespace

OracleResult oracle_optimum(const Federation& fed, const LossModel& model) {
    if (model.family == LossFamily::LeastSquares) return least_squares_oracle(fed, model);
    return logistic_oracle(fed, model);
}

double theta(double w, double r, double sigma) {
    return sigma - w * r - 2.0 * w * w * r * r / sigma;
}

double vartheta(double w, double r, double sigma) {
    return sigma - 18.0 * w * w * r * r / sigma;
}

RateReport check_rate_bound(const std::vector<TraceRecord>& trace, const RateInputs& in, double f_star, Variant variant) {
    const double m = static_cast<double>(in.m());
    RateReport rep;
    bool theta_ok = true, vartheta_ok = true;
    for (std::size_t i = 0; i < in.m(); ++i) {
        double th = theta(in.w[i], in.r[i], in.sigma[i]);
        double vt = vartheta(in.w[i], in.r[i], in.sigma[i]);
        theta_ok = theta_ok && th > 0.0;
        vartheta_ok = vartheta_ok && vt > 0.0;
        if (th > 0.0) rep.rho = std::max(rep.rho, 8.0 * m * in.sigma[i] * in.sigma[i] / th);
        if (vt > 0.0) rep.varrho = std::max(rep.varrho, 12.0 * m * in.sigma[i] * in.sigma[i] / vt);
    }
    if (variant == Variant::CEADMM && !theta_ok)
        throw Error(ErrorCode::HypothesisViolation, "theta_i <= 0 for some client (sigma_i too small)");
    if (variant == Variant::ICEADMM && !vartheta_ok)
        throw Error(ErrorCode::HypothesisViolation, "vartheta_i <= 0 for some client (sigma_i too small)");
    if (!theta_ok) rep.rho = 0.0;
    if (!vartheta_ok) rep.varrho = 0.0;

    const auto last = static_cast<std::int64_t>(trace.size()) - 1;
    const std::int64_t shift = variant == Variant::CEADMM ? 0 : in.k0;
    const double constant = variant == Variant::CEADMM ? rep.rho : rep.varrho;
    if (last < 1 || (variant == Variant::ICEADMM && last < 1 + shift)) return rep;
    const double gap = variant == Variant::CEADMM ? trace[0].L - f_star : trace[1].phi - f_star;

    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t k = 1; k + shift <= last; ++k) {
        const auto& rec = trace[static_cast<std::size_t>(k + shift)];
        best = std::min(best, std::max(rec.grad_F_sq, rec.grad_f_sq));
        RatePoint p{k, best, constant * static_cast<double>(in.k0) / static_cast<double>(k) * gap};
        if (p.lhs <= p.rhs * (1.0 + 1e-6))
            rep.bound_satisfied_at.push_back(p);
        else
            rep.violations.push_back(p);
    }
    return rep;
}

std::vector<Violation> check_descent_lemma(const std::vector<TraceRecord>& trace, const RateInputs& in, double slack,
                                           std::int64_t from_k) {
    double sigma = 0.0;
    std::vector<double> th(in.m());
    for (std::size_t i = 0; i < in.m(); ++i) {
        sigma += in.sigma[i];
        th[i] = theta(in.w[i], in.r[i], in.sigma[i]);
    }
    std::vector<Violation> out;
    for (std::size_t k = static_cast<std::size_t>(std::max<std::int64_t>(from_k, 0)); k + 1 < trace.size(); ++k) {
        const auto& next = trace[k + 1];
        double bound = -0.5 * sigma * next.dy_sq;
        for (std::size_t i = 0; i < th.size() && i < next.dx_sq.size(); ++i) bound -= 0.5 * th[i] * next.dx_sq[i];
        double lhs = next.L - trace[k].L;
        if (lhs > bound + slack) out.push_back({static_cast<std::int64_t>(k), lhs, bound + slack});
    }
    return out;
}

std::vector<Violation> check_lyapunov(const std::vector<TraceRecord>& trace, double slack, std::int64_t from_k) {
    std::vector<Violation> out;
    for (std::size_t k = static_cast<std::size_t>(std::max<std::int64_t>(from_k, 0)); k + 1 < trace.size(); ++k) {
        double lhs = trace[k + 1].phi;
        if (lhs > trace[k].phi + slack) out.push_back({static_cast<std::int64_t>(k), lhs, trace[k].phi + slack});
    }
    return out;
}

std::vector<Violation> check_sandwich(const std::vector<TraceRecord>& trace, double f_star, double slack,
                                      std::int64_t from_k) {
    std::vector<Violation> out;
    for (std::size_t k = static_cast<std::size_t>(std::max<std::int64_t>(from_k, 0)); k < trace.size(); ++k) {
        const auto& rec = trace[k];
        if (rec.L < rec.f_y - slack) out.push_back({rec.k, rec.L, rec.f_y - slack});
        if (rec.f_y < f_star - slack) out.push_back({rec.k, rec.f_y, f_star - slack});
    }
    return out;
}

}  // namespace fedadmm
