#include "transfall/model_generation.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

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

TEST_CASE("separable 1-D problem is learned perfectly", "[model_generation]") {
    Matrix X(8, 1);
    X << -1.2, -1.0, -0.9, -1.1, 0.9, 1.0, 1.1, 1.2;
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    const LogisticModel m = fit_logistic(X, y, 2);
    CHECK(predict_logistic(m, X) == y);
}

TEST_CASE("analytic gradient matches central finite differences", "[model_generation]") {
    const Matrix X = random_matrix(5, 3, 5);
    const std::vector<int> y{0, 1, 2, 1, 0};
    const double l2 = 1e-3;
    Matrix Xa(5, 4);
    Xa.leftCols(3) = X;
    Xa.col(3).setOnes();

    for (std::uint64_t seed : {1u, 2u}) {
        const Matrix W = random_matrix(3, 4, seed, 0.5);
        const Matrix analytic = logistic_gradient(W, Xa, y, l2);
        const Matrix fd = oracle::fd_gradient(
            [&](const Matrix& w) { return logistic_loss(w, Xa, y, l2); }, W);
        const double rel =
            (analytic - fd).cwiseAbs().maxCoeff() / std::max(1e-12, fd.cwiseAbs().maxCoeff());
        CHECK(rel < 1e-6);
    }
}

TEST_CASE("single-class training degenerates cleanly", "[model_generation]") {
    const Matrix X = random_matrix(10, 2, 9);
    const std::vector<int> y(10, 0);
    LogisticHyper hyper;
    hyper.l2 = 0.0;
    const LogisticModel m = fit_logistic(X, y, 1, hyper);
    CHECK(m.final_loss < 1e-12);
    const auto pred = predict_logistic(m, random_matrix(5, 2, 10));
    CHECK(pred == std::vector<int>(5, 0));
}

TEST_CASE("training loss is nonincreasing under the default step", "[model_generation]") {
    const Matrix X = random_matrix(60, 16, 15, 2.0);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) y[i] = i % 3;
    LogisticHyper hyper;
    hyper.max_iters = 800;
    const LogisticModel m = fit_logistic(X, y, 3, hyper);
    REQUIRE(m.loss_history.size() >= 2);
    for (std::size_t i = 1; i < m.loss_history.size(); ++i)
        CHECK(m.loss_history[i] <= m.loss_history[i - 1] + 1e-10);
    CHECK(m.final_loss == m.loss_history.back());
}

TEST_CASE("prediction ties break toward the smaller class", "[model_generation]") {
    LogisticModel m;
    m.weights.resize(2, 2);
    m.weights << 1.0, 0.0, -1.0, 0.0;  // symmetric scores at x = 0
    m.feat_mean = Vector::Zero(1);
    m.feat_std = Vector::Ones(1);
    CHECK(predict_logistic(m, Matrix::Zero(1, 1)) == std::vector<int>{0});
}

TEST_CASE("labels equal an independent hand-rolled scorer", "[model_generation]") {
    const Matrix X = random_matrix(40, 4, 25, 1.5);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) y[i] = (i * 7) % 3;
    const LogisticModel m = fit_logistic(X, y, 3);
    const auto pred = predict_logistic(m, X);

    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        double best_score = -1e300;
        for (Eigen::Index cls = 0; cls < 3; ++cls) {
            double s = m.weights(cls, 4);
            for (Eigen::Index j = 0; j < 4; ++j)
                s += m.weights(cls, j) * (X(i, j) - m.feat_mean[j]) / m.feat_std[j];
            if (s > best_score) {
                best_score = s;
                best = static_cast<int>(cls);
            }
        }
        CHECK(pred[i] == best);
    }
}

TEST_CASE("standardization folds into raw-feature weights", "[model_generation]") {
    const Matrix X = random_matrix(30, 3, 35, 4.0);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) y[i] = i % 2;
    const LogisticModel m = fit_logistic(X, y, 2);
    const Matrix folded = m.folded_weights();

    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index cls = 0; cls < 2; ++cls) {
            double via_std = m.weights(cls, 3);
            double via_raw = folded(cls, 3);
            for (Eigen::Index j = 0; j < 3; ++j) {
                via_std += m.weights(cls, j) * (X(i, j) - m.feat_mean[j]) / m.feat_std[j];
                via_raw += folded(cls, j) * X(i, j);
            }
            CHECK(std::abs(via_std - via_raw) < 1e-10);
        }
    }
}

TEST_CASE("fit_logistic validates inputs and reports divergence", "[model_generation]") {
    const Matrix X = random_matrix(6, 2, 45);
    SECTION("class absent") {
        REQUIRE_THROWS_WITH(fit_logistic(X, {0, 0, 0, 0, 0, 0}, 2),
                            Catch::Matchers::ContainsSubstring("absent"));
    }
    SECTION("label out of range") {
        REQUIRE_THROWS_AS(fit_logistic(X, {0, 1, 2, 0, 1, 0}, 2), std::invalid_argument);
    }
    SECTION("divergent step reports the iteration") {
        LogisticHyper hyper;
        hyper.lr = 1e18;
        hyper.l2 = 0.0;
        REQUIRE_THROWS_WITH(fit_logistic(X, {0, 1, 0, 1, 0, 1}, 2, hyper),
                            Catch::Matchers::ContainsSubstring("iteration"));
    }
}

TEST_CASE("nearest neighbor matches its contract", "[model_generation]") {
    const Matrix Xtr = random_matrix(50, 4, 55);
    std::vector<int> ytr(50);
    for (int i = 0; i < 50; ++i) ytr[i] = (i * 13) % 4;

    SECTION("a training point maps to its own label") {
        for (int i : {0, 7, 49})
            CHECK(fit_predict_nn(Xtr, ytr, Xtr.row(i)) == std::vector<int>{ytr[i]});
    }
    SECTION("equidistant neighbors resolve to the smaller index") {
        Matrix tr(2, 1);
        tr << -1.0, 1.0;
        CHECK(fit_predict_nn(tr, {3, 4}, Matrix::Zero(1, 1)) == std::vector<int>{3});
    }
    SECTION("matches the exhaustive scan exactly") {
        const Matrix Xte = random_matrix(30, 4, 56);
        CHECK(fit_predict_nn(Xtr, ytr, Xte) == oracle::nn_scan(Xtr, ytr, Xte));
    }
    SECTION("duplicated training samples never change predictions") {
        Matrix dup(Xtr.rows() + 1, Xtr.cols());
        dup << Xtr, Xtr.row(20);
        std::vector<int> ydup = ytr;
        ydup.push_back(ytr[20]);
        const Matrix Xte = random_matrix(25, 4, 57);
        CHECK(fit_predict_nn(dup, ydup, Xte) == fit_predict_nn(Xtr, ytr, Xte));
    }
    SECTION("dimension mismatch") {
        REQUIRE_THROWS_AS(fit_predict_nn(Xtr, ytr, random_matrix(3, 5, 58)),
                          std::invalid_argument);
    }
}

TEST_CASE("logistic model export round-trips bitwise", "[model_generation]") {
    testutil::TempDir tmp;
    const Matrix X = random_matrix(20, 3, 65);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) y[i] = i % 2;
    const LogisticModel m = fit_logistic(X, y, 2);
    const auto p = tmp.path / "logistic.txt";
    save_logistic_model(p, m);
    const LogisticModel r = load_logistic_model(p);
    CHECK(testutil::equal_exact(r.weights, m.weights));
    CHECK(testutil::equal_exact(r.feat_mean, m.feat_mean));
    CHECK(testutil::equal_exact(r.feat_std, m.feat_std));
    CHECK(r.iters == m.iters);
    const Matrix Xt = random_matrix(9, 3, 66);
    CHECK(predict_logistic(r, Xt) == predict_logistic(m, Xt));
}
