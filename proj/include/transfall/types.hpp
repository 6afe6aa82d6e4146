#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace transfall {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Feature matrix plus integer class labels. `num_classes` is the size of
/// the label alphabet; labels are in [0, num_classes).
struct LabeledDataset {
    Matrix features;          // N x d, rows are samples
    std::vector<int> labels;  // length N
    int num_classes = 0;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace transfall
