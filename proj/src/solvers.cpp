#include "fedadmm/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "fedadmm/errors.hpp"

namespace fedadmm {

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::FedAvg: return "fedavg";
        case Algorithm::ADMM: return "admm";
        case Algorithm::CEADMM: return "ceadmm";
        case Algorithm::LIADMM: return "liadmm";
        case Algorithm::IADMM: return "iadmm";
        case Algorithm::ICEADMM: return "iceadmm";
    }
    return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& s) {
    for (auto a : {Algorithm::FedAvg, Algorithm::ADMM, Algorithm::CEADMM, Algorithm::LIADMM, Algorithm::IADMM,
                   Algorithm::ICEADMM})
        if (s == algorithm_name(a)) return a;
    return std::nullopt;
}

double sigma_schedule(const SigmaRule& rule, double w, double r, std::size_t m, std::size_t d_i, std::int64_t k0,
                      std::size_t client_index) {
    double s = 0.0;
    if (const auto* p = std::get_if<LogScaleRule>(&rule)) {
        s = p->a * std::log(static_cast<double>(m) * static_cast<double>(d_i)) /
            (10.0 * std::log(2.0 + static_cast<double>(k0))) * w * r;
    } else if (const auto* t = std::get_if<TheoryMultiplier>(&rule)) {
        s = t->c * w * r;
    } else {
        const auto& v = std::get<ExplicitSigma>(rule).values;
        if (client_index >= v.size())
            throw Error(ErrorCode::NonPositiveSigma, "no explicit sigma for client " + std::to_string(client_index));
        s = v[client_index];
    }
    if (!(s > 0.0) || !std::isfinite(s))
        throw Error(ErrorCode::NonPositiveSigma, "sigma for client " + std::to_string(client_index) + " is " + std::to_string(s));
    return s;
}

Vector fedavg_local(const Vector& x_bcast, double gamma, const LossModel& model, const ClientDataset& data) {
    Vector x = x_bcast;
    axpy(-gamma, loss_gradient(model, data, x_bcast), x);
    return x;
}

Vector fedavg_aggregate(const std::vector<ClientState>& clients, const std::vector<double>& weights) {
    if (clients.empty() || clients.size() != weights.size())
        throw Error(ErrorCode::DimensionMismatch, "fedavg aggregate needs one weight per client");
    Vector acc(clients.front().x.size(), 0.0);
    for (std::size_t i = 0; i < clients.size(); ++i) axpy(weights[i], clients[i].x, acc);
    return acc;
}

namespace {

ClientState finish(const ClientState& state, Vector x_new, const Vector& y, const LossModel& model,
                   const ClientDataset& data) {
    ClientState out;
    out.sigma = state.sigma;
    out.x = std::move(x_new);
    out.pi = state.pi;
    ClientState tmp{out.x, state.pi, {}, state.sigma};
    out.pi = dual_update(tmp, y);
    out.g = scaled(data.weight, loss_gradient(model, data, out.x));
    return out;
}

}  // namespace

ExactLocalSolver::ExactLocalSolver(const LossModel& model, const ClientDataset& data, double sigma, double inner_tol)
    : model_(&model), data_(&data), sigma_(sigma), inner_tol_(inner_tol) {
    if (model.family == LossFamily::LeastSquares) {
        factor_ = Cholesky(shifted(gram(data.features), data.weight, sigma));
        wAtb_ = scaled(data.weight, multiply_transposed(data.features, data.targets));
    } else {
        validate(model, data);
    }
}

ClientState ExactLocalSolver::update(const ClientState& state, const Vector& y) const {
    const double w = data_->weight;
    const double sigma = sigma_;
    if (model_->family == LossFamily::LeastSquares) {
        Vector rhs = wAtb_;
        for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] += sigma * y[j] - state.pi[j];
        return finish(state, factor_.solve(rhs), y, *model_, *data_);
    }

    // damped Newton on w f(x) + <x - y, pi> + sigma/2 |x - y|^2
    Vector rhs = scaled(sigma, y);
    axpy(-1.0, state.pi, rhs);
    const double tol = inner_tol_ * (1.0 + std::sqrt(norm_sq(rhs)));
    auto objective = [&](const Vector& x) {
        Vector diff = sub(x, y);
        return w * loss_value(*model_, *data_, x) + dot(diff, state.pi) + 0.5 * sigma * norm_sq(diff);
    };
    auto gradient = [&](const Vector& x) {
        Vector g = scaled(w, loss_gradient(*model_, *data_, x));
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += state.pi[j] + sigma * (x[j] - y[j]);
        return g;
    };
    Vector x = state.x;
    double phi = objective(x);
    for (int step = 0; step < 100; ++step) {
        Vector g = gradient(x);
        if (std::sqrt(norm_sq(g)) <= tol) return finish(state, std::move(x), y, *model_, *data_);
        Matrix h = shifted(loss_hessian(*model_, *data_, x), w, sigma);
        Vector dir = scaled(-1.0, spd_solve(h, g));
        const double slope = dot(g, dir);
        double t = 1.0;
        Vector trial;
        double phi_trial = phi;
        for (int back = 0; back < 40; ++back, t *= 0.5) {
            trial = x;
            axpy(t, dir, trial);
            phi_trial = objective(trial);
            // rounding allowance so near-converged steps are not rejected
            if (phi_trial <= phi + 1e-4 * t * slope + 1e-15 * std::abs(phi)) break;
        }
        x = std::move(trial);
        phi = phi_trial;
    }
    Vector g = gradient(x);
    if (std::sqrt(norm_sq(g)) <= tol) return finish(state, std::move(x), y, *model_, *data_);
    throw Error(ErrorCode::InnerSolveFailure, "Newton did not reach inner_tol in 100 steps for client " +
                                                  std::to_string(data_->client_id));
}

InexactLocalSolver::InexactLocalSolver(const LossModel& model, const ClientDataset& data, const Matrix& h, double sigma)
    : model_(&model), data_(&data), sigma_(sigma) {
    const std::size_t n = data.features.cols();
    if (h.rows() != n || h.cols() != n) throw Error(ErrorCode::DimensionMismatch, "curvature matrix size");
    bool is_scalar = n > 0;
    for (std::size_t i = 0; i < n && is_scalar; ++i)
        for (std::size_t j = 0; j < n && is_scalar; ++j)
            is_scalar = (i == j) ? h(i, j) == h(0, 0) : h(i, j) == 0.0;
    if (is_scalar)
        scalar_ = data.weight * h(0, 0) + sigma;
    else
        factor_ = Cholesky(shifted(h, data.weight, sigma));
}

ClientState InexactLocalSolver::update(const ClientState& state, const Vector& y) const {
    Vector rhs(state.x.size());
    for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = sigma_ * (state.x[j] - y[j]) + state.g[j] + state.pi[j];
    Vector step = scalar_ ? scaled(1.0 / *scalar_, rhs) : factor_.solve(rhs);
    return finish(state, sub(state.x, step), y, *model_, *data_);
}

ClientState ceadmm_local(const ClientState& state, const Vector& y, const LossModel& model, const ClientDataset& data,
                         double inner_tol) {
    return ExactLocalSolver(model, data, state.sigma, inner_tol).update(state, y);
}

ClientState iceadmm_local(const ClientState& state, const Vector& y, const Matrix& h, const LossModel& model,
                          const ClientDataset& data) {
    return InexactLocalSolver(model, data, h, state.sigma).update(state, y);
}

LiadmmStep liadmm_step(const std::vector<ClientState>& clients, double gamma, const LossModel& model, const Federation& fed) {
    if (clients.size() != fed.m()) throw Error(ErrorCode::DimensionMismatch, "client states vs federation");
    LiadmmStep out;
    out.x.assign(fed.n, 0.0);
    for (std::size_t i = 0; i < clients.size(); ++i) {
        axpy(fed.clients[i].weight, clients[i].x, out.x);
        axpy(gamma, clients[i].pi, out.x);
    }
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const auto& data = fed.clients[i];
        const double w = data.weight;
        ClientState c;
        c.sigma = w / gamma;
        c.x = fedavg_local(out.x, gamma, model, data);
        axpy(-gamma / w, clients[i].pi, c.x);
        c.pi = clients[i].pi;
        for (std::size_t j = 0; j < c.pi.size(); ++j) c.pi[j] += (w / gamma) * (c.x[j] - out.x[j]);
        c.g = scaled(w, loss_gradient(model, data, c.x));
        out.clients.push_back(std::move(c));
    }
    return out;
}

std::vector<Matrix> curvature_matrices(const Federation& fed, const LossModel& model, const CurvatureMode& mode) {
    std::vector<Matrix> hs;
    for (const auto& c : fed.clients) hs.push_back(curvature_matrix(model, c, mode));
    return hs;
}

namespace {

void require_finite(const Vector& v, std::int64_t k, const char* what, std::size_t client) {
    if (!all_finite(v))
        throw Error(ErrorCode::NonFiniteIterate, std::string(what) + " of client " + std::to_string(client) +
                                                     " at iteration " + std::to_string(k));
}

}  // namespace

SolveResult run(Algorithm algorithm, const Federation& fed, const LossModel& model, const HyperParams& hp,
                const IterationObserver& observer) {
    const std::size_t m = fed.m();
    const std::size_t n = fed.n;
    if (m == 0) throw Error(ErrorCode::InvalidRange, "empty federation");
    if (hp.k0 < 1) throw Error(ErrorCode::InvalidRange, "k0 must be >= 1");
    if (hp.max_iters < 0) throw Error(ErrorCode::InvalidRange, "max_iters must be >= 0");

    Algorithm alg = algorithm;
    std::int64_t k0 = hp.k0;
    if (alg == Algorithm::ADMM) alg = Algorithm::CEADMM, k0 = 1;
    if (alg == Algorithm::IADMM) alg = Algorithm::ICEADMM, k0 = 1;
    if (alg == Algorithm::FedAvg || alg == Algorithm::LIADMM) k0 = 1;
    for (const auto& c : fed.clients) validate(model, c);
    if (alg == Algorithm::ICEADMM) validate(model, hp.curvature);

    RateInputs consts;
    consts.k0 = k0;
    for (const auto& c : fed.clients) {
        consts.w.push_back(c.weight);
        consts.r.push_back(lipschitz_constant(model, c));
    }
    double gamma = 0.0;
    if (alg == Algorithm::FedAvg || alg == Algorithm::LIADMM) {
        gamma = hp.gamma.value_or(1.0 / (2.0 * *std::max_element(consts.r.begin(), consts.r.end())));
        if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidRange, "gamma must be positive");
        for (std::size_t i = 0; i < m; ++i) consts.sigma.push_back(consts.w[i] / gamma);
    } else {
        for (std::size_t i = 0; i < m; ++i)
            consts.sigma.push_back(sigma_schedule(hp.sigma_rule, consts.w[i], consts.r[i], m, fed.clients[i].rows(), k0, i));
    }

    std::vector<std::unique_ptr<ExactLocalSolver>> exact(m);
    std::vector<std::unique_ptr<InexactLocalSolver>> inexact(m);
    std::vector<double> lyap(m);  // 6 w^2 r^2 / sigma
    for (std::size_t i = 0; i < m; ++i) {
        const auto& data = fed.clients[i];
        lyap[i] = 6.0 * consts.w[i] * consts.w[i] * consts.r[i] * consts.r[i] / consts.sigma[i];
        if (alg == Algorithm::CEADMM)
            exact[i] = std::make_unique<ExactLocalSolver>(model, data, consts.sigma[i], hp.inner_tol);
        if (alg == Algorithm::ICEADMM)
            inexact[i] = std::make_unique<InexactLocalSolver>(
                model, data, curvature_matrix(model, data, hp.curvature, consts.r[i]), consts.sigma[i]);
    }

    std::vector<ClientState> clients(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto& c = clients[i];
        c.sigma = consts.sigma[i];
        c.x.assign(n, 0.0);
        c.g = scaled(consts.w[i], loss_gradient(model, fed.clients[i], c.x));
        c.pi = (hp.dual_init == DualInit::Gradient && alg != Algorithm::FedAvg) ? scaled(-1.0, c.g) : Vector(n, 0.0);
    }

    ServerState server;
    server.y.assign(n, 0.0);
    server.sigma_total = sigma_total(clients);

    ScheduleOptions sched;
    sched.k0 = k0;
    LocalKernel kernel;
    switch (alg) {
        case Algorithm::CEADMM:
            kernel = [&](std::size_t i, const ClientState& s, const Vector& y) { return exact[i]->update(s, y); };
            break;
        case Algorithm::ICEADMM:
            kernel = [&](std::size_t i, const ClientState& s, const Vector& y) { return inexact[i]->update(s, y); };
            break;
        case Algorithm::LIADMM:
            // aggregate() with sigma_i = w_i / gamma is sum w_i x_i + gamma sum pi_i
            kernel = [&](std::size_t i, const ClientState& s, const Vector& y) {
                const auto& data = fed.clients[i];
                Vector x = fedavg_local(y, gamma, model, data);
                axpy(-gamma / data.weight, s.pi, x);
                return finish(s, std::move(x), y, model, data);
            };
            break;
        default:
            sched.uploads_per_client = 1;
            sched.aggregator = [&](const std::vector<ClientState>& cs) { return fedavg_aggregate(cs, consts.w); };
            kernel = [&](std::size_t i, const ClientState& s, const Vector& y) {
                const auto& data = fed.clients[i];
                ClientState out = s;
                out.x = fedavg_local(y, gamma, model, data);
                out.g = scaled(data.weight, loss_gradient(model, data, out.x));
                return out;
            };
            break;
    }

    const auto start = std::chrono::steady_clock::now();
    auto seconds = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    auto make_record = [&](std::int64_t k, const std::vector<ClientState>& cs, const Vector& y,
                           const std::vector<ClientState>* prev, const Vector* y_prev) {
        TraceRecord rec;
        rec.k = k;
        rec.in_K = in_schedule(k, k0);
        rec.dx_sq.assign(m, 0.0);
        Vector grad_f(n, 0.0), grad_F(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& data = fed.clients[i];
            const auto& c = cs[i];
            double fx = data.weight * loss_value(model, data, c.x);
            Vector diff = sub(c.x, y);
            rec.F_X += fx;
            rec.L += fx + dot(diff, c.pi) + 0.5 * c.sigma * norm_sq(diff);
            rec.f_y += data.weight * loss_value(model, data, y);
            axpy(data.weight, loss_gradient(model, data, y), grad_f);
            axpy(1.0, c.g, grad_F);
            if (prev) rec.dx_sq[i] = dist_sq(c.x, (*prev)[i].x);
        }
        rec.phi = rec.L;
        for (std::size_t i = 0; i < m; ++i) rec.phi += lyap[i] * rec.dx_sq[i];
        rec.grad_f_sq = norm_sq(grad_f);
        rec.grad_F_sq = norm_sq(grad_F);
        rec.residuals = residuals(cs, y);
        if (y_prev) rec.dy_sq = dist_sq(y, *y_prev);
        rec.rounds = server.ledger.rounds;
        rec.elapsed_s = hp.record_timing ? seconds() : 0.0;
        return rec;
    };
    const double threshold = stop_threshold(n, fed.d, hp.tol_scale);
    auto stop = [&](const TraceRecord& rec) {
        return alg == Algorithm::FedAvg ? rec.grad_f_sq <= threshold : rec.residuals.max() <= threshold;
    };

    SolveResult result;
    result.trace.push_back(make_record(0, clients, server.y, nullptr, nullptr));
    result.converged = stop(result.trace.back());

    std::unique_ptr<WorkerPool> pool;
    if (hp.threads > 1) pool = std::make_unique<WorkerPool>(hp.threads);

    while (!result.converged && server.k < hp.max_iters) {
        std::vector<ClientState> before = clients;
        Vector y_prev = server.y;
        const std::int64_t k = server.k;
        const bool aggregated = in_schedule(k, k0);
        server = step_schedule(server, sched, clients, kernel, pool.get());
        require_finite(server.y, k, "server point", 0);
        for (std::size_t i = 0; i < m; ++i) {
            require_finite(clients[i].x, k, "primal", i);
            require_finite(clients[i].pi, k, "dual", i);
        }
        result.trace.push_back(make_record(server.k, clients, server.y, &before, &y_prev));
        if (observer) observer(IterationView{k, aggregated, y_prev, server.y, before, clients});
        result.converged = stop(result.trace.back());
    }

    result.elapsed_s = hp.record_timing ? seconds() : 0.0;
    result.iterations = server.k;
    result.rounds = server.ledger.rounds;
    result.ledger = server.ledger;
    result.y_final = server.y;
    result.constants = std::move(consts);
    result.clients = std::move(clients);
    return result;
}

}  // namespace fedadmm
