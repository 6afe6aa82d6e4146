#pragma once

#include "transfall/types.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>
#include <vector>

namespace transfall {

/// Constraint band and solver controls for the importance-weight QP.
/// epsilon unset means the standard band (sqrt(N) - 1) / sqrt(N).
struct QpSettings {
    std::optional<double> epsilon;
    double cap = 1000.0;   // upper bound B on each weight
    int max_iters = 20000;
    double tol = 1e-7;     // gradient-mapping 2-norm
    double jitter = 1e-8;  // added to the Gram diagonal
    bool record_history = false;
};

/// Solver output: the weight vector plus convergence metadata. `converged`
/// is false when the iteration budget ran out; the last iterate is still
/// returned and remains feasible.
struct WeightVector {
    Vector beta;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
    double kkt_residual = 0.0;  // gradient-mapping 2-norm at the final iterate
    double epsilon_used = 0.0;
    std::vector<std::pair<double, double>> history;  // (objective, residual) per iteration
};

namespace detail {

// Euclidean projection onto {b : lo <= mean(b) <= hi} is a constant shift.
inline void project_mean_band(Vector& b, double lo, double hi) {
    const double m = b.mean();
    if (m < lo)
        b.array() += lo - m;
    else if (m > hi)
        b.array() += hi - m;
}

// Dykstra alternating projection onto {box [0, cap]} intersect {mean band}.
// Both sets are convex and intersect (the all-ones vector is feasible), so
// the iteration converges to the Euclidean projection; it is run to a
// machine-precision fixed point.
inline Vector project_feasible(Vector v, double cap, double lo, double hi) {
    Vector x = std::move(v);
    Vector p = Vector::Zero(x.size());
    Vector q = Vector::Zero(x.size());
    for (int it = 0; it < 500; ++it) {
        Vector y = (x + p).cwiseMax(0.0).cwiseMin(cap);
        p = x + p - y;
        Vector z = y + q;
        project_mean_band(z, lo, hi);
        q = y + q - z;
        const double delta = (z - x).lpNorm<Eigen::Infinity>();
        x = std::move(z);
        if (delta <= 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
    }
    return x;
}

}  // namespace detail

/// Importance weights by empirical kernel mean matching: minimize
/// 0.5 * b'(K + jitter*I)b - kappa'b over {0 <= b_i <= cap,
/// |mean(b) - 1| <= epsilon}, by projected gradient descent with step 1/L,
/// L the largest absolute row sum of the regularized Gram matrix.
inline WeightVector solve_kmm(const Matrix& K, const Vector& kappa, const QpSettings& settings = {}) {
    const Eigen::Index n = K.rows();
    require(K.cols() == n, "solve_kmm: K must be square");
    require(kappa.size() == n, "solve_kmm: kappa length must match K");
    require(all_finite(K) && all_finite(kappa), "solve_kmm: non-finite input");
    require(settings.cap > 0.0 && settings.tol > 0.0 && settings.jitter >= 0.0,
            "solve_kmm: invalid settings");

    const double ns = static_cast<double>(n);
    const double eps = settings.epsilon.value_or((std::sqrt(ns) - 1.0) / std::sqrt(ns));
    require(eps >= 0.0, "solve_kmm: epsilon must be nonnegative");
    const double lo = 1.0 - eps, hi = 1.0 + eps;
    require(settings.cap >= lo, "solve_kmm: cap below the feasible mean band");

    Matrix Kj = K;
    Kj.diagonal().array() += settings.jitter;
    const double lipschitz = Kj.cwiseAbs().rowwise().sum().maxCoeff();
    const double step = 1.0 / lipschitz;

    auto objective = [&](const Vector& b) { return 0.5 * b.dot(Kj * b) - kappa.dot(b); };

    WeightVector result;
    Vector beta = detail::project_feasible(Vector::Ones(n), settings.cap, lo, hi);

    int it = 0;
    double residual = 0.0;
    for (; it < settings.max_iters; ++it) {
        const Vector grad = Kj * beta - kappa;
        Vector next = detail::project_feasible(beta - step * grad, settings.cap, lo, hi);
        residual = ((beta - next) / step).norm();
        if (settings.record_history) result.history.emplace_back(objective(beta), residual);
        beta = std::move(next);
        if (residual < settings.tol) {
            result.converged = true;
            ++it;
            break;
        }
    }

    result.beta = std::move(beta);
    result.iterations = it;
    result.objective = objective(result.beta);
    result.kkt_residual = residual;
    result.epsilon_used = eps;
    if (settings.record_history) result.history.emplace_back(result.objective, residual);
    return result;
}

/// Per-iteration diagnostics as CSV: iteration, objective, residual.
inline void write_kmm_diagnostics(const std::filesystem::path& path, const WeightVector& w) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write KMM diagnostics: " + path.string());
    os << "iteration,objective,residual\n";
    char buf[128];
    for (std::size_t i = 0; i < w.history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, w.history[i].first,
                      w.history[i].second);
        os << buf;
    }
}

}  // namespace transfall
