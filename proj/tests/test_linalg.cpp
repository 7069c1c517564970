#include <gtest/gtest.h>

#include <cmath>

#include "fedadmm/errors.hpp"
#include "fedadmm/linalg.hpp"
#include "fedadmm/rng.hpp"
#include "test_util.hpp"

using namespace fedadmm;
using testutil::random_matrix;
using testutil::random_vector;
using testutil::to_eigen;

namespace {

Matrix random_spd(std::mt19937_64& rng, std::size_t n, double shift) {
    Matrix g = random_matrix(rng, n, n);
    return shifted(gram(g), 1.0, shift);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no fedadmm::Error thrown";
    return ErrorCode::ConfigError;
}

}  // namespace

TEST(SpdSolve, IdentityAndDiagonal) {
    EXPECT_EQ(spd_solve(Matrix::identity(2), {3.0, -1.0}), (Vector{3.0, -1.0}));
    Vector u = spd_solve(Matrix::diagonal({2.0, 4.0}), {2.0, 4.0});
    EXPECT_DOUBLE_EQ(u[0], 1.0);
    EXPECT_DOUBLE_EQ(u[1], 1.0);
}

TEST(SpdSolve, MatchesEigenLuOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = random_spd(rng, 8, 1.0);
        Vector v = random_vector(rng, 8);
        Vector u = spd_solve(m, v);
        Eigen::VectorXd ref = to_eigen(m).partialPivLu().solve(to_eigen(v));
        for (int i = 0; i < 8; ++i) EXPECT_NEAR(u[i], ref(i), 1e-9);
        Vector r = sub(multiply(m, u), v);
        EXPECT_LE(norm_inf(r), 1e-10 * (1.0 + norm_inf(v)));
    }
}

TEST(SpdSolve, RecoversKnownSolution) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + trial % 9;
        Matrix m = random_spd(rng, n, 1e-3);
        Vector u = random_vector(rng, n);
        Vector back = spd_solve(m, multiply(m, u));
        EXPECT_LE(std::sqrt(dist_sq(back, u)), 1e-9 * std::sqrt(norm_sq(u)))
            << "n=" << n;
    }
}

TEST(SpdSolve, Errors) {
    Matrix asym{{2.0, 1.0}, {0.0, 2.0}};
    EXPECT_EQ(code_of([&] { spd_solve(asym, {1.0, 1.0}); }), ErrorCode::NotSymmetric);
    Matrix indefinite{{1.0, 2.0}, {2.0, 1.0}};
    EXPECT_EQ(code_of([&] { spd_solve(indefinite, {1.0, 1.0}); }), ErrorCode::FactorizationFailure);
    EXPECT_EQ(code_of([&] { spd_solve(Matrix::identity(2), {1.0}); }), ErrorCode::DimensionMismatch);
}

TEST(SpdSolve, Deterministic) {
    std::mt19937_64 rng(13);
    Matrix m = random_spd(rng, 7, 0.5);
    Vector v = random_vector(rng, 7);
    EXPECT_EQ(spd_solve(m, v), spd_solve(m, v));
}

TEST(LambdaMax, SmallCases) {
    EXPECT_NEAR(lambda_max(Matrix::diagonal({3.0, 1.0})), 3.0, 1e-8);
    EXPECT_EQ(lambda_max(Matrix(3, 3)), 0.0);
    // all-ones start lies in the null space here
    Matrix m{{1.0, -1.0}, {-1.0, 1.0}};
    EXPECT_NEAR(lambda_max(m), 2.0, 1e-8);
}

TEST(LambdaMax, MatchesEigenOracle) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 25; ++trial) {
        Matrix g = random_matrix(rng, 6 + trial % 5, 6);
        Matrix m = gram(g);
        double ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(to_eigen(m)).eigenvalues().maxCoeff();
        EXPECT_NEAR(lambda_max(m), ref, 1e-7 * std::max(1.0, ref));
    }
}

TEST(LambdaMax, RayleighLowerBound) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 25; ++trial) {
        Matrix g = random_matrix(rng, 9, 5);
        double lam = lambda_max(gram(g));
        Vector v = random_vector(rng, 5);
        double rq = norm_sq(multiply(g, v)) / norm_sq(v);
        EXPECT_GE(lam * (1 + 1e-10), rq);
    }
}

TEST(SymmetricEigen, MatchesEigen) {
    std::mt19937_64 rng(16);
    Matrix m = gram(random_matrix(rng, 7, 5));
    SymmetricEigen e = symmetric_eigen(m);
    Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(to_eigen(m)).eigenvalues();
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(e.values[i], ref(i), 1e-10 * ref.maxCoeff());
    Eigen::MatrixXd v = to_eigen(e.vectors);
    Eigen::MatrixXd rebuilt = v * to_eigen(e.values).asDiagonal() * v.transpose();
    EXPECT_LT((rebuilt - to_eigen(m)).cwiseAbs().maxCoeff(), 1e-10 * ref.maxCoeff());
}

TEST(Gram, ExactlySymmetricAndMatchesProduct) {
    std::mt19937_64 rng(17);
    Matrix a = random_matrix(rng, 4, 3);
    Matrix g = gram(a);
    Eigen::MatrixXd ref = to_eigen(a).transpose() * to_eigen(a);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_EQ(g(i, j), g(j, i));
            EXPECT_NEAR(g(i, j), ref(i, j), 1e-13);
        }
}

// numpy.random.Philox(counter=[0,0,0,0], key=k).random_raw() increments the
// counter before its first block, so those outputs are our block at counter 1.
TEST(Philox, MatchesNumpyBitGenerator) {
    auto b = Philox::block({1, 0, 0, 0}, {0, 0});
    EXPECT_EQ(b[0], 0x02f4ba6408e4d89bULL);
    EXPECT_EQ(b[1], 0x3dd62b0b9ca8c5b2ULL);
    EXPECT_EQ(b[2], 0x1c8667a55d902e79ULL);
    EXPECT_EQ(b[3], 0x907d7a052fd5b4dcULL);
    auto c = Philox::block({2, 0, 0, 0}, {0, 0});
    EXPECT_EQ(c[0], 0x809bf322883987c3ULL);
    EXPECT_EQ(c[3], 0xfc6ed66767a457bcULL);
    auto d = Philox::block({1, 0, 0, 0}, {7, 3});
    EXPECT_EQ(d[0], 0x7b6cc7b1862cc5f2ULL);
    EXPECT_EQ(d[1], 0xb960f2ea4b3f8d9fULL);
    EXPECT_EQ(d[2], 0x0cdd72e015deb1a6ULL);
    EXPECT_EQ(d[3], 0x50edb0d22a6a6fd5ULL);
}

TEST(Philox, StreamsAreIndependentAndRepeatable) {
    Philox a(5, 1), b(5, 1), c(5, 2);
    for (int i = 0; i < 10; ++i) {
        auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_NE(x, c.next_u64());
    }
}

TEST(Philox, UniformRanges) {
    Philox g(1, 0);
    for (int i = 0; i < 10000; ++i) {
        double u = g.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        auto k = g.uniform_int(3, 7);
        EXPECT_GE(k, 3);
        EXPECT_LE(k, 7);
    }
}

TEST(Philox, StudentTVariance) {
    Philox g(2024, 0);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double t = g.student_t(5);
        sum += t;
        sq += t * t;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    EXPECT_NEAR(var, 5.0 / 3.0, 0.15 * 5.0 / 3.0);
}

TEST(Philox, NormalMoments) {
    Philox g(9, 4);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = g.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.02);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}
