#pragma once

#include "transfall/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace transfall {

/// Gaussian kernel k(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2)).
struct KernelConfig {
    double bandwidth = 1.0;
};

inline double eval(const KernelConfig& cfg, const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "kernel eval: dimension mismatch");
    require(std::isfinite(cfg.bandwidth) && cfg.bandwidth > 0.0,
            "kernel eval: bandwidth must be finite and positive");
    const double sq = (x - y).squaredNorm();
    return std::exp(-sq / (2.0 * cfg.bandwidth * cfg.bandwidth));
}

/// Dense Gram matrix K_ij = k(x_i, x_j). Each unordered pair is evaluated
/// once, so the result is exactly symmetric with unit diagonal.
inline Matrix gram(const KernelConfig& cfg, const Matrix& X) {
    require(X.rows() >= 1, "gram: empty matrix");
    const double inv = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
    const Eigen::Index n = X.rows();
    Matrix K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::exp(-(X.row(i) - X.row(j)).squaredNorm() * inv);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

/// Kernel expansion kappa_i = (N_s / N_t) * sum_j k(x_i^s, x_j^t).
inline Vector kappa(const KernelConfig& cfg, const Matrix& Xs, const Matrix& Xt) {
    require(Xs.cols() == Xt.cols(), "kappa: dimension mismatch");
    require(Xt.rows() >= 1, "kappa: empty target");
    const double inv = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
    const double scale = static_cast<double>(Xs.rows()) / static_cast<double>(Xt.rows());
    Vector k(Xs.rows());
    for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < Xt.rows(); ++j)
            acc += std::exp(-(Xs.row(i) - Xt.row(j)).squaredNorm() * inv);
        k[i] = scale * acc;
    }
    return k;
}

/// Median of pairwise Euclidean distances. All pairs are enumerated when
/// N <= 1000; otherwise min(N^2, 1e6) pairs are sampled with a fixed seed.
/// Throws when the median distance is zero (all sampled rows identical).
inline double median_bandwidth(const Matrix& X) {
    const Eigen::Index n = X.rows();
    require(n >= 2, "median_bandwidth: need at least two rows");

    std::vector<double> dists;
    if (n <= 1000) {
        dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                dists.push_back((X.row(i) - X.row(j)).norm());
    } else {
        const std::size_t pairs = std::min<std::size_t>(
            static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 1000000);
        std::mt19937_64 rng(0x5eedb4d5u);
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        dists.reserve(pairs);
        while (dists.size() < pairs) {
            const Eigen::Index i = pick(rng);
            const Eigen::Index j = pick(rng);
            if (i == j) continue;
            dists.push_back((X.row(i) - X.row(j)).norm());
        }
    }

    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    double med = dists[mid];
    if (dists.size() % 2 == 0) {
        std::nth_element(dists.begin(), dists.begin() + mid - 1, dists.begin() + mid);
        med = 0.5 * (med + dists[mid - 1]);
    }
    if (med <= 0.0) throw std::runtime_error("median_bandwidth: zero median distance");
    return med;
}

}  // namespace transfall
