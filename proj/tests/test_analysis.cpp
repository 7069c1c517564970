#include <gtest/gtest.h>

#include <cmath>

#include "fedadmm/analysis.hpp"
#include "fedadmm/errors.hpp"
#include "fedadmm/solvers.hpp"
#include "test_util.hpp"

using namespace fedadmm;
using testutil::random_client;
using testutil::random_vector;
using testutil::to_eigen;

namespace {

ClientState make_state(Vector x, Vector pi, Vector g, double sigma) {
    return ClientState{std::move(x), std::move(pi), std::move(g), sigma};
}

Federation random_federation(std::mt19937_64& rng, std::size_t m, std::size_t n, bool binary) {
    std::vector<ClientDataset> cs;
    for (std::size_t i = 0; i < m; ++i) cs.push_back(random_client(rng, 6 + 3 * i, n, binary, static_cast<int>(i)));
    return make_federation(cs);
}

}  // namespace

TEST(Lagrangian, ConsensusGivesObjective) {
    std::mt19937_64 rng(61);
    Federation fed = random_federation(rng, 4, 3, false);
    Vector y = random_vector(rng, 3);
    std::vector<ClientState> cs;
    for (int i = 0; i < 4; ++i) cs.push_back(make_state(y, random_vector(rng, 3), Vector(3, 0.0), 1.7));
    LossModel m = LossModel::least_squares();
    EXPECT_NEAR(lagrangian(cs, y, m, fed), federated_objective(m, fed, y), 1e-14);
}

TEST(Lagrangian, ScalarExample) {
    ClientDataset c;
    c.features = Matrix{{1.0}};
    c.targets = {1.0};
    Federation fed = make_federation({c});
    std::vector<ClientState> cs{make_state({1.0}, {1.0}, {0.0}, 2.0)};
    EXPECT_DOUBLE_EQ(lagrangian(cs, {0.0}, LossModel::least_squares(), fed), 2.0);
}

TEST(Lagrangian, ExtendedPrecisionOracle) {
    std::mt19937_64 rng(62);
    LossModel m = LossModel::least_squares();
    for (int trial = 0; trial < 10; ++trial) {
        Federation fed = random_federation(rng, 3, 4, false);
        Vector y = random_vector(rng, 4);
        std::vector<ClientState> cs;
        for (int i = 0; i < 3; ++i) cs.push_back(make_state(random_vector(rng, 4), random_vector(rng, 4), Vector(4, 0.0), 0.5 + i));
        long double ref = 0.0L;
        for (int i = 0; i < 3; ++i) {
            const auto& d = fed.clients[i];
            long double f = 0.0L;
            for (std::size_t r = 0; r < d.rows(); ++r) {
                long double t = -static_cast<long double>(d.targets[r]);
                for (std::size_t j = 0; j < 4; ++j) t += static_cast<long double>(d.features(r, j)) * cs[i].x[j];
                f += 0.5L * t * t;
            }
            ref += d.weight * f;
            for (std::size_t j = 0; j < 4; ++j) {
                long double diff = static_cast<long double>(cs[i].x[j]) - y[j];
                ref += diff * cs[i].pi[j] + 0.5L * cs[i].sigma * diff * diff;
            }
        }
        double v = lagrangian(cs, y, m, fed);
        EXPECT_NEAR(v, static_cast<double>(ref), 1e-10 * std::abs(static_cast<double>(ref)));

        double penalty = 0.0;
        for (const auto& c : cs) {
            Vector diff = sub(c.x, y);
            penalty += dot(diff, c.pi) + 0.5 * c.sigma * norm_sq(diff);
        }
        EXPECT_NEAR(v - local_objective(m, fed, cs), penalty, 1e-10 * (1.0 + std::abs(penalty)));
    }
}

TEST(Residuals, Examples) {
    std::vector<ClientState> stat{make_state({1.0, 2.0}, {0.5, -0.5}, {-0.5, 0.5}, 1.0),
                                  make_state({1.0, 2.0}, {-0.5, 0.5}, {0.5, -0.5}, 1.0)};
    ResidualTriple r = residuals(stat, {1.0, 2.0});
    EXPECT_EQ(r.dual, 0.0);
    EXPECT_EQ(r.primal, 0.0);
    EXPECT_EQ(r.consensus, 0.0);

    std::vector<ClientState> one{make_state({3.0, 4.0}, {-1.0, 2.0}, {1.0, -2.0}, 1.0)};
    r = residuals(one, {3.0, 4.0});
    EXPECT_EQ(r.dual, 0.0);
    EXPECT_EQ(r.primal, 0.0);
    EXPECT_DOUBLE_EQ(r.consensus, 5.0);
}

TEST(Residuals, ComponentwiseOracle) {
    std::mt19937_64 rng(63);
    std::vector<ClientState> cs;
    for (int i = 0; i < 5; ++i) cs.push_back(make_state(random_vector(rng, 6), random_vector(rng, 6), random_vector(rng, 6), 1.0));
    Vector y = random_vector(rng, 6);
    ResidualTriple r = residuals(cs, y);
    long double dual = 0, primal = 0, cons = 0;
    for (std::size_t j = 0; j < 6; ++j) {
        long double s = 0;
        for (const auto& c : cs) {
            long double a = static_cast<long double>(c.g[j]) + c.pi[j];
            long double b = static_cast<long double>(c.x[j]) - y[j];
            dual += a * a;
            primal += b * b;
            s += c.pi[j];
        }
        cons += s * s;
    }
    EXPECT_NEAR(r.dual, static_cast<double>(dual), 1e-12 * (1 + static_cast<double>(dual)));
    EXPECT_NEAR(r.primal, static_cast<double>(primal), 1e-12 * (1 + static_cast<double>(primal)));
    EXPECT_NEAR(r.consensus, static_cast<double>(cons), 1e-12 * (1 + static_cast<double>(cons)));
    EXPECT_DOUBLE_EQ(r.max(), std::max({r.dual, r.primal, r.consensus}));
}

TEST(ShouldStop, Boundary) {
    EXPECT_TRUE(should_stop({0.0, 0.0, 0.0}, 100, 900));
    EXPECT_TRUE(should_stop({3e-5, 0.0, 0.0}, 100, 900));
    EXPECT_FALSE(should_stop({0.0, 3.1e-5, 0.0}, 100, 900));
    EXPECT_FALSE(should_stop({0.0, 0.0, 3.1e-5}, 100, 900));
    EXPECT_NEAR(stop_threshold(100, 900, 1e-7), 3e-5, 1e-18);
}

TEST(ShouldStop, MonotoneInTolerance) {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> u(0.0, 1e-3);
    for (int trial = 0; trial < 200; ++trial) {
        ResidualTriple r{u(rng), u(rng), u(rng)};
        double t = u(rng) * 1e-2;
        if (should_stop(r, 20, 400, t)) EXPECT_TRUE(should_stop(r, 20, 400, 2 * t));
    }
}

TEST(Oracle, Examples) {
    ClientDataset c;
    c.features = Matrix::identity(2);
    c.targets = {1.0, 2.0};
    OracleResult o = oracle_optimum(make_federation({c}), LossModel::least_squares());
    EXPECT_NEAR(o.x[0], 1.0, 1e-14);
    EXPECT_NEAR(o.x[1], 2.0, 1e-14);
    EXPECT_NEAR(o.f, 0.0, 1e-28);
    EXPECT_FALSE(o.min_norm_fallback);

    std::mt19937_64 rng(65);
    ClientDataset a = random_client(rng, 10, 3, false, 0);
    ClientDataset b = a;
    b.client_id = 1;
    OracleResult one = oracle_optimum(make_federation({a}), LossModel::least_squares());
    OracleResult two = oracle_optimum(make_federation({a, b}), LossModel::least_squares());
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(one.x[j], two.x[j], 1e-12);
}

TEST(Oracle, LeastSquaresGradientVanishes) {
    std::mt19937_64 rng(66);
    Federation fed = random_federation(rng, 5, 6, false);
    LossModel m = LossModel::least_squares();
    OracleResult o = oracle_optimum(fed, m);
    EXPECT_LE(norm_inf(federated_gradient(m, fed, o.x)), 1e-10);
    EXPECT_NEAR(o.f, federated_objective(m, fed, o.x), 1e-14);
}

TEST(Oracle, MinimumNormFallback) {
    // rank one: pooled Gram singular
    ClientDataset c;
    c.features = Matrix{{1.0, 1.0}, {2.0, 2.0}};
    c.targets = {1.0, 2.0};
    OracleResult o = oracle_optimum(make_federation({c}), LossModel::least_squares());
    EXPECT_TRUE(o.min_norm_fallback);
    EXPECT_NEAR(o.x[0], 0.5, 1e-10);
    EXPECT_NEAR(o.x[1], 0.5, 1e-10);
}

TEST(Oracle, LogisticGradientVanishes) {
    std::mt19937_64 rng(67);
    Federation fed = random_federation(rng, 3, 4, true);
    LossModel m = LossModel::logistic(0.1);
    OracleResult o = oracle_optimum(fed, m);
    EXPECT_LE(norm_inf(federated_gradient(m, fed, o.x)), 1e-12);
}

TEST(Theta, Formulas) {
    EXPECT_DOUBLE_EQ(theta(1.0, 1.0, 2.1), 2.1 - 1.0 - 2.0 / 2.1);
    EXPECT_DOUBLE_EQ(vartheta(0.5, 2.0, 4.3), 4.3 - 18.0 / 4.3);
}

TEST(RateBound, HypothesisViolation) {
    RateInputs in{{1.0}, {1.0}, {1.5}, 1};
    std::vector<TraceRecord> trace(2);
    try {
        check_rate_bound(trace, in, 0.0, Variant::CEADMM);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::HypothesisViolation);
    }
    RateInputs ok{{1.0}, {1.0}, {2.1}, 1};
    EXPECT_THROW(check_rate_bound(trace, ok, 0.0, Variant::ICEADMM), Error);
}

TEST(RateBound, StationaryStart) {
    RateInputs in{{1.0}, {1.0}, {5.0}, 1};
    std::vector<TraceRecord> trace(5);
    for (int k = 0; k < 5; ++k) trace[k].k = k;
    RateReport rep = check_rate_bound(trace, in, 0.0, Variant::CEADMM);
    EXPECT_TRUE(rep.violations.empty());
    EXPECT_EQ(rep.bound_satisfied_at.size(), 4u);
    for (const auto& p : rep.bound_satisfied_at) EXPECT_EQ(p.lhs, 0.0);
}

TEST(RateBound, ScalarHandTranscription) {
    const double a = 1.5, b = 2.0;
    ClientDataset c;
    c.features = Matrix{{a}};
    c.targets = {b};
    Federation fed = make_federation({c});
    LossModel m = LossModel::least_squares();
    HyperParams hp;
    hp.max_iters = 3;
    hp.tol_scale = 0.0;
    SolveResult res = run(Algorithm::CEADMM, fed, m, hp);
    ASSERT_EQ(res.trace.size(), 4u);

    const double r = a * a * (1 + 1e-6);
    const double sigma = 2.1 * r;
    EXPECT_NEAR(res.constants.sigma[0], sigma, 1e-14);
    double x = 0.0, pi = 0.0, y = 0.0;
    auto f = [&](double z) { return 0.5 * (a * z - b) * (a * z - b); };
    auto grad = [&](double z) { return a * (a * z - b); };
    std::vector<double> L{f(x) + (x - y) * pi + 0.5 * sigma * (x - y) * (x - y)};
    for (int k = 1; k <= 3; ++k) {
        y = x + pi / sigma;
        x = (a * b + sigma * y - pi) / (a * a + sigma);
        pi = pi + sigma * (x - y);
        L.push_back(f(x) + (x - y) * pi + 0.5 * sigma * (x - y) * (x - y));
        EXPECT_NEAR(res.trace[k].f_y, f(y), 1e-12);
        EXPECT_NEAR(res.trace[k].L, L.back(), 1e-12);
        EXPECT_NEAR(res.trace[k].grad_f_sq, grad(y) * grad(y), 1e-12);
    }

    const double th = sigma - r - 2 * r * r / sigma;
    RateReport rep = check_rate_bound(res.trace, res.constants, 0.0, Variant::CEADMM);
    EXPECT_NEAR(rep.rho, 8 * sigma * sigma / th, 1e-9);
    EXPECT_TRUE(rep.violations.empty());
    ASSERT_EQ(rep.bound_satisfied_at.size(), 3u);
    // hand evaluation of min_{j<=k} max(|grad F|^2, |grad f|^2) against rho k0 / k (L0 - f*)
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 3; ++k) {
        best = std::min(best, std::max(res.trace[k].grad_F_sq, res.trace[k].grad_f_sq));
        double rhs = rep.rho / k * (L[0] - 0.0);
        EXPECT_NEAR(rep.bound_satisfied_at[k - 1].lhs, best, 1e-12);
        EXPECT_NEAR(rep.bound_satisfied_at[k - 1].rhs, rhs, 1e-9 * rhs);
        EXPECT_LE(best, rhs);
    }
}

TEST(Checks, DescentLemmaFlagsIncrease) {
    RateInputs in{{1.0}, {1.0}, {2.1}, 1};
    std::vector<TraceRecord> trace(3);
    for (int k = 0; k < 3; ++k) {
        trace[k].k = k;
        trace[k].dx_sq = {0.0};
    }
    trace[0].L = 1.0;
    trace[1].L = 0.5;
    trace[2].L = 0.6;
    auto v = check_descent_lemma(trace, in);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].k, 1);
    // a decrease smaller than the required amount is also a violation
    trace[2].L = 0.5;
    trace[2].dy_sq = 1.0;
    EXPECT_EQ(check_descent_lemma(trace, in).size(), 1u);
    EXPECT_TRUE(check_descent_lemma(trace, in, 1e-8, 2).empty());
}

TEST(Checks, LyapunovAndSandwich) {
    std::vector<TraceRecord> trace(4);
    double phis[] = {0.0, 3.0, 2.0, 2.0 + 1e-12};
    for (int k = 0; k < 4; ++k) {
        trace[k].k = k;
        trace[k].phi = phis[k];
        trace[k].L = 2.0;
        trace[k].f_y = 1.5;
    }
    EXPECT_TRUE(check_lyapunov(trace).empty());
    EXPECT_EQ(check_lyapunov(trace, 1e-10, 0).size(), 1u);
    EXPECT_TRUE(check_sandwich(trace, 1.0).empty());
    EXPECT_EQ(check_sandwich(trace, 1.6).size(), 4u);
    trace[2].f_y = 2.5;
    EXPECT_EQ(check_sandwich(trace, 1.0).size(), 1u);
}
