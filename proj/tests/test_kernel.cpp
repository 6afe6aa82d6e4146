#include "transfall/kernel.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace transfall;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = dist(rng);
    return X;
}

}  // namespace

TEST_CASE("eval basics", "[kernel]") {
    KernelConfig cfg{1.0};
    Vector x(2), y(2);
    x << 1.0, 1.0;
    y << 0.0, 0.0;
    CHECK(eval(cfg, x, x) == 1.0);
    CHECK(eval(cfg, x, y) == Catch::Approx(std::exp(-1.0)).margin(1e-15));  // ||x-y||^2 = 2

    Vector z(3);
    REQUIRE_THROWS_AS(eval(cfg, x, z), std::invalid_argument);
    REQUIRE_THROWS_AS(eval(KernelConfig{0.0}, x, y), std::invalid_argument);
    REQUIRE_THROWS_AS(eval(KernelConfig{-1.0}, x, y), std::invalid_argument);
}

TEST_CASE("eval agrees with a scalar recomputation and is symmetric", "[kernel]") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> dist(0.0, 2.0);
    KernelConfig cfg{1.7};
    for (int t = 0; t < 50; ++t) {
        Vector x(5), y(5);
        for (int i = 0; i < 5; ++i) {
            x[i] = dist(rng);
            y[i] = dist(rng);
        }
        const double v = eval(cfg, x, y);
        CHECK(std::abs(v - oracle::gaussian_kernel(x, y, cfg.bandwidth)) < 1e-15);
        CHECK(v == eval(cfg, y, x));
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("eval is invariant to a common rescaling of features and bandwidth", "[kernel]") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector x(4), y(4);
    for (int i = 0; i < 4; ++i) {
        x[i] = dist(rng);
        y[i] = dist(rng);
    }
    const double base = eval(KernelConfig{0.9}, x, y);
    for (double c : {0.1, 3.0, 250.0}) {
        const double scaled = eval(KernelConfig{0.9 * c}, (c * x).eval(), (c * y).eval());
        CHECK(std::abs(scaled - base) < 1e-12);
    }
}

TEST_CASE("gram structure", "[kernel]") {
    KernelConfig cfg{1.3};
    SECTION("single row") {
        const Matrix K = gram(cfg, random_matrix(1, 3, 1));
        REQUIRE(K.rows() == 1);
        CHECK(K(0, 0) == 1.0);
    }
    SECTION("duplicated rows give unit entries") {
        Matrix X = random_matrix(4, 3, 2);
        X.row(2) = X.row(0);
        const Matrix K = gram(cfg, X);
        CHECK(K(0, 2) == 1.0);
        CHECK(K(2, 0) == 1.0);
    }
    SECTION("matches the brute-force double loop") {
        const Matrix X = random_matrix(5, 2, 3);
        const Matrix K = gram(cfg, X);
        const Matrix B = oracle::brute_gram(X, cfg.bandwidth);
        CHECK((K - B).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("exactly symmetric, unit diagonal, entries in (0, 1]") {
        const Matrix K = gram(cfg, random_matrix(40, 6, 4));
        CHECK(testutil::equal_exact(K, K.transpose()));
        CHECK((K.diagonal().array() == 1.0).all());
        CHECK(K.minCoeff() > 0.0);
        CHECK(K.maxCoeff() <= 1.0);
    }
    SECTION("positive semidefinite on fixtures") {
        for (std::uint64_t seed : {5u, 6u, 7u}) {
            const Matrix K = gram(cfg, random_matrix(30, 4, seed));
            Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
        }
    }
}

TEST_CASE("kappa cross-kernel expansion", "[kernel]") {
    KernelConfig cfg{1.1};
    SECTION("identical sets reduce to Gram row sums") {
        const Matrix X = random_matrix(12, 3, 8);
        const Vector k = kappa(cfg, X, X);
        const Vector rowsums = gram(cfg, X) * Vector::Ones(12);
        CHECK((k - rowsums).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("unit case") {
        const Matrix X = random_matrix(1, 3, 9);
        const Vector k = kappa(cfg, X, X);
        REQUIRE(k.size() == 1);
        CHECK(k[0] == 1.0);
    }
    SECTION("matches the brute-force double loop and stays in (0, Ns]") {
        const Matrix Xs = random_matrix(9, 4, 10);
        const Matrix Xt = random_matrix(14, 4, 11);
        const Vector k = kappa(cfg, Xs, Xt);
        CHECK((k - oracle::brute_kappa(Xs, Xt, cfg.bandwidth)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(k.minCoeff() > 0.0);
        CHECK(k.maxCoeff() <= 9.0);
    }
    SECTION("contract violations") {
        REQUIRE_THROWS_AS(kappa(cfg, random_matrix(3, 2, 1), random_matrix(3, 3, 1)),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(kappa(cfg, random_matrix(3, 2, 1), Matrix(0, 2)),
                          std::invalid_argument);
    }
}

TEST_CASE("median_bandwidth small cases", "[kernel]") {
    Matrix two(2, 1);
    two << 0.0, 2.0;
    CHECK(median_bandwidth(two) == 2.0);

    Matrix three(3, 1);
    three << 0.0, 1.0, 2.0;  // pairwise distances {1, 1, 2}
    CHECK(median_bandwidth(three) == 1.0);

    Matrix same(3, 2);
    same.setConstant(1.0);
    REQUIRE_THROWS_WITH(median_bandwidth(same), Catch::Matchers::ContainsSubstring("zero"));
    REQUIRE_THROWS_AS(median_bandwidth(Matrix(1, 2)), std::invalid_argument);
}

TEST_CASE("median_bandwidth equals the exhaustive median on a 100-row fixture", "[kernel]") {
    const Matrix X = random_matrix(100, 5, 77);
    CHECK(std::abs(median_bandwidth(X) - oracle::exhaustive_median_distance(X)) < 1e-12);
}

TEST_CASE("median_bandwidth sampling path is deterministic", "[kernel]") {
    const Matrix X = random_matrix(1200, 3, 99);
    const double a = median_bandwidth(X);
    const double b = median_bandwidth(X);
    CHECK(a == b);
    // sampled median sits inside the support of pairwise distances
    CHECK(a > 0.0);
    CHECK(a < 20.0);
}
