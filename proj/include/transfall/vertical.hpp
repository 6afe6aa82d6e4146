#pragma once

#include "transfall/types.hpp"

#include <cmath>

namespace transfall {

/// Per-dimension population mean/variance of a feature matrix.
struct DomainStats {
    Vector means;
    Vector variances;
};

/// Columns whose standard deviation falls below this floor are treated as
/// degenerate: the transform shifts them by the mean difference only.
inline constexpr double kSigmaFloor = 1e-8;

inline DomainStats fit_stats(const Matrix& X) {
    require(X.rows() >= 1, "fit_stats: empty matrix");
    DomainStats s;
    s.means = X.colwise().mean();
    s.variances = (X.rowwise() - s.means.transpose()).array().square().colwise().sum() /
                  static_cast<double>(X.rows());
    return s;
}

/// Match each target column's marginal moments to the source: per dimension i,
/// x~ = (x - mu_t[i]) / sigma_t[i] * sigma_s[i] + mu_s[i]. Row count and row
/// order are preserved; the map is monotone increasing per dimension.
inline Matrix transform(const Matrix& Xt, const DomainStats& source, const DomainStats& target) {
    const Eigen::Index d = Xt.cols();
    require(source.means.size() == d && target.means.size() == d,
            "transform: dimension mismatch");
    require(source.variances.size() == d && target.variances.size() == d,
            "transform: dimension mismatch");

    Matrix out(Xt.rows(), d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double sigma_t = std::sqrt(target.variances[i]);
        const double sigma_s = std::sqrt(source.variances[i]);
        if (sigma_t < kSigmaFloor) {
            out.col(i) = Xt.col(i).array() + (source.means[i] - target.means[i]);
        } else {
            out.col(i) =
                (Xt.col(i).array() - target.means[i]) / sigma_t * sigma_s + source.means[i];
        }
    }
    return out;
}

}  // namespace transfall
