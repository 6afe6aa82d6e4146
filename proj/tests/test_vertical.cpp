#include "transfall/vertical.hpp"

#include "oracles.hpp"
#include "transfall/data.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace transfall;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, scale);
    Matrix X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = dist(rng);
    return X;
}

}  // namespace

TEST_CASE("fit_stats computes population moments", "[vertical]") {
    Matrix X(2, 1);
    X << 2.0, 4.0;
    const DomainStats s = fit_stats(X);
    CHECK(s.means[0] == 3.0);
    CHECK(s.variances[0] == 1.0);

    const DomainStats one = fit_stats(random_matrix(1, 4, 9));
    CHECK((one.variances.array() == 0.0).all());

    REQUIRE_THROWS_AS(fit_stats(Matrix(0, 3)), std::invalid_argument);
}

TEST_CASE("fit_stats matches an independent recomputation", "[vertical]") {
    const Matrix X = random_matrix(37, 6, 101, 2.5);
    const DomainStats s = fit_stats(X);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        std::vector<double> col(X.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) col[i] = X(i, j);
        const auto st = oracle::axis_stats(col);
        CHECK(std::abs(s.means[j] - st.mean) < 1e-12);
        CHECK(std::abs(s.variances[j] - st.stddev * st.stddev) < 1e-12);
    }
}

TEST_CASE("transform standardizes against given stats", "[vertical]") {
    Matrix Xt(2, 1);
    Xt << 2.0, 4.0;
    DomainStats source{Vector::Zero(1), Vector::Ones(1)};
    const Matrix out = transform(Xt, source, fit_stats(Xt));
    CHECK(out(0, 0) == Catch::Approx(-1.0).margin(1e-15));
    CHECK(out(1, 0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("transform with matching stats is the identity", "[vertical]") {
    const Matrix Xt = random_matrix(25, 4, 3);
    const DomainStats s = fit_stats(Xt);
    const Matrix out = transform(Xt, s, s);
    CHECK((out - Xt).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transform undoes a synthetic affine shift", "[vertical]") {
    LabeledDataset src;
    src.features = random_matrix(300, 5, 77);
    src.labels.assign(300, 0);
    src.num_classes = 1;
    const auto shifted =
        synth_shift(src, Vector::Constant(5, 2.0), Vector::Constant(5, 1.0), 0);

    const DomainStats stats_s = fit_stats(src.features);
    const Matrix back = transform(shifted.features, stats_s, fit_stats(shifted.features));
    const DomainStats stats_b = fit_stats(back);
    CHECK((stats_b.means - stats_s.means).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((stats_b.variances - stats_s.variances).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("transform matches arbitrary source stats and is idempotent", "[vertical]") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> mdist(-3.0, 3.0);
    std::uniform_real_distribution<double> vdist(0.2, 4.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix Xt = random_matrix(80, 6, 1000 + trial, 1.7);
        DomainStats target_stats = fit_stats(Xt);
        DomainStats s;
        s.means.resize(6);
        s.variances.resize(6);
        for (int j = 0; j < 6; ++j) {
            s.means[j] = mdist(rng);
            s.variances[j] = vdist(rng);
        }
        const Matrix once = transform(Xt, s, target_stats);
        const DomainStats achieved = fit_stats(once);
        CHECK((achieved.means - s.means).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((achieved.variances - s.variances).cwiseAbs().maxCoeff() < 1e-9);

        const Matrix twice = transform(once, s, fit_stats(once));
        CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("transform preserves row count, order and column ranks", "[vertical]") {
    const Matrix Xt = random_matrix(60, 3, 8);
    DomainStats s;
    s.means = Vector::Constant(3, 5.0);
    s.variances = Vector::Constant(3, 9.0);
    const Matrix out = transform(Xt, s, fit_stats(Xt));
    REQUIRE(out.rows() == Xt.rows());
    for (Eigen::Index j = 0; j < 3; ++j)
        for (Eigen::Index a = 0; a < 60; ++a)
            for (Eigen::Index b = a + 1; b < 60; ++b)
                if (Xt(a, j) < Xt(b, j)) CHECK(out(a, j) < out(b, j));
}

TEST_CASE("degenerate target columns get a mean shift only", "[vertical]") {
    Matrix Xt = random_matrix(20, 2, 13);
    Xt.col(1).setConstant(4.0);
    DomainStats s;
    s.means = Vector::Constant(2, 1.0);
    s.variances = Vector::Constant(2, 2.0);
    const Matrix out = transform(Xt, s, fit_stats(Xt));
    CHECK((out.col(1).array() == 1.0).all());  // shifted to the source mean, not rescaled
}

TEST_CASE("transform rejects dimension mismatches", "[vertical]") {
    const Matrix Xt = random_matrix(5, 3, 2);
    DomainStats bad{Vector::Zero(2), Vector::Ones(2)};
    REQUIRE_THROWS_AS(transform(Xt, bad, fit_stats(Xt)), std::invalid_argument);
}
