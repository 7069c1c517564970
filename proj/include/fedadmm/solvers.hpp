#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedadmm/analysis.hpp"
#include "fedadmm/data.hpp"
#include "fedadmm/fedcore.hpp"
#include "fedadmm/losses.hpp"

namespace fedadmm {

// ADMM and IADMM are CEADMM and ICEADMM with k0 forced to 1.
enum class Algorithm { FedAvg, ADMM, CEADMM, LIADMM, IADMM, ICEADMM };

const char* algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(const std::string& s);

// sigma_i = a ln(m d_i) / (10 ln(2 + k0)) w_i r_i
struct LogScaleRule {
    double a = 1.0;
};
// sigma_i = c w_i r_i
struct TheoryMultiplier {
    double c = 2.1;
};
struct ExplicitSigma {
    std::vector<double> values;
};
using SigmaRule = std::variant<LogScaleRule, TheoryMultiplier, ExplicitSigma>;

enum class DualInit {
    Zero,      // pi_i^0 = 0
    Gradient,  // pi_i^0 = -w_i grad f_i(x_i^0)
};

struct HyperParams {
    std::int64_t k0 = 1;
    SigmaRule sigma_rule = TheoryMultiplier{2.1};
    CurvatureMode curvature = CurvatureMode::scalar();
    std::optional<double> gamma;  // FedAvg / LIADMM; default 1 / (2 max r_i)
    std::int64_t max_iters = 10000;
    double tol_scale = 1e-7;
    double inner_tol = 1e-10;
    DualInit dual_init = DualInit::Zero;
    std::size_t threads = 1;
    bool record_timing = false;
};

struct SolveResult {
    Vector y_final;
    std::vector<TraceRecord> trace;
    std::int64_t iterations = 0;
    std::int64_t rounds = 0;
    bool converged = false;
    CommLedger ledger;
    RateInputs constants;
    std::vector<ClientState> clients;
    double elapsed_s = 0.0;
};

double sigma_schedule(const SigmaRule& rule, double w, double r, std::size_t m, std::size_t d_i, std::int64_t k0,
                      std::size_t client_index = 0);

Vector fedavg_local(const Vector& x_bcast, double gamma, const LossModel& model, const ClientDataset& data);
Vector fedavg_aggregate(const std::vector<ClientState>& clients, const std::vector<double>& weights);

// Exact minimizer of w f(x) + <x - y, pi> + (sigma/2)|x - y|^2. Least squares uses a
// cached Cholesky factor, logistic a damped Newton loop.
class ExactLocalSolver {
public:
    ExactLocalSolver(const LossModel& model, const ClientDataset& data, double sigma, double inner_tol);
    ClientState update(const ClientState& state, const Vector& y) const;

private:
    const LossModel* model_;
    const ClientDataset* data_;
    double sigma_;
    double inner_tol_;
    Cholesky factor_;
    Vector wAtb_;
};

// One majorized step x+ = x - (w H + sigma I)^{-1} [sigma (x - y) + g + pi].
class InexactLocalSolver {
public:
    InexactLocalSolver(const LossModel& model, const ClientDataset& data, const Matrix& h, double sigma);
    ClientState update(const ClientState& state, const Vector& y) const;

private:
    const LossModel* model_;
    const ClientDataset* data_;
    double sigma_;
    std::optional<double> scalar_;  // set when H = r I
    Cholesky factor_;
};

ClientState ceadmm_local(const ClientState& state, const Vector& y, const LossModel& model, const ClientDataset& data,
                         double inner_tol);
ClientState iceadmm_local(const ClientState& state, const Vector& y, const Matrix& h, const LossModel& model,
                          const ClientDataset& data);

struct LiadmmStep {
    Vector x;  // new server point
    std::vector<ClientState> clients;
};
// clients[i].sigma is ignored; sigma_i = w_i / gamma
LiadmmStep liadmm_step(const std::vector<ClientState>& clients, double gamma, const LossModel& model, const Federation& fed);

struct IterationView {
    std::int64_t k = 0;  // the iteration just completed
    bool aggregated = false;
    const Vector& y_prev;
    const Vector& y;
    const std::vector<ClientState>& before;
    const std::vector<ClientState>& after;
};
using IterationObserver = std::function<void(const IterationView&)>;

SolveResult run(Algorithm algorithm, const Federation& fed, const LossModel& model, const HyperParams& hp,
                const IterationObserver& observer = {});

// Curvature matrices a run would use for ICEADMM.
std::vector<Matrix> curvature_matrices(const Federation& fed, const LossModel& model, const CurvatureMode& mode);

}  // namespace fedadmm
