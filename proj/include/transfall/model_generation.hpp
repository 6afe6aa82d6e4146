#pragma once

#include "transfall/types.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace transfall {

struct LogisticHyper {
    double lr = 0.1;
    double l2 = 1e-4;
    int max_iters = 5000;
    double tol = 1e-6;  // max-abs gradient entry
};

/// Multinomial logistic model over standardized features. weights is
/// L x (d+1) with the bias in the last column; feat_mean/feat_std are the
/// training moments applied before scoring.
struct LogisticModel {
    Matrix weights;
    Vector feat_mean;
    Vector feat_std;
    int iters = 0;
    double final_loss = 0.0;
    std::vector<double> loss_history;

    /// Equivalent weights acting on raw (unstandardized) features.
    Matrix folded_weights() const {
        const Eigen::Index L = weights.rows();
        const Eigen::Index d = weights.cols() - 1;
        Matrix out(L, d + 1);
        for (Eigen::Index m = 0; m < L; ++m) {
            double bias = weights(m, d);
            for (Eigen::Index j = 0; j < d; ++j) {
                out(m, j) = weights(m, j) / feat_std[j];
                bias -= weights(m, j) * feat_mean[j] / feat_std[j];
            }
            out(m, d) = bias;
        }
        return out;
    }
};

namespace detail {

// rows of X are samples with a trailing 1 for the bias term
inline Matrix softmax_rows(const Matrix& scores) {
    Matrix p = scores;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

}  // namespace detail

/// Mean cross-entropy of the L x (d+1) weight matrix on augmented samples
/// Xa (N x (d+1), last column ones), with an L2 penalty on the non-bias
/// columns. Exposed separately so gradients can be checked independently.
inline double logistic_loss(const Matrix& weights, const Matrix& Xa, const std::vector<int>& y,
                            double l2) {
    const Eigen::Index n = Xa.rows();
    const Eigen::Index d = weights.cols() - 1;
    const Matrix p = detail::softmax_rows(Xa * weights.transpose());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        loss -= std::log(std::max(p(i, y[i]), std::numeric_limits<double>::min()));
    loss /= static_cast<double>(n);
    loss += 0.5 * l2 * weights.leftCols(d).squaredNorm();
    return loss;
}

inline Matrix logistic_gradient(const Matrix& weights, const Matrix& Xa,
                                const std::vector<int>& y, double l2) {
    const Eigen::Index n = Xa.rows();
    const Eigen::Index d = weights.cols() - 1;
    Matrix p = detail::softmax_rows(Xa * weights.transpose());
    for (Eigen::Index i = 0; i < n; ++i) p(i, y[i]) -= 1.0;
    Matrix g = (p.transpose() * Xa) / static_cast<double>(n);
    g.leftCols(d) += l2 * weights.leftCols(d);
    return g;
}

/// L2-regularized multinomial logistic regression by full-batch gradient
/// descent. Features are standardized internally with population moments;
/// the moments are stored in the model. Deterministic: zero init, fixed
/// step, no shuffling.
inline LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y, int L,
                                  const LogisticHyper& hyper = {}) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    require(static_cast<Eigen::Index>(y.size()) == n, "fit_logistic: label count mismatch");
    require(L >= 1 && n >= L, "fit_logistic: need at least one sample per class");
    std::vector<int> counts(L, 0);
    for (int v : y) {
        require(v >= 0 && v < L, "fit_logistic: label out of range");
        ++counts[v];
    }
    for (int m = 0; m < L; ++m)
        if (counts[m] == 0)
            throw std::runtime_error("fit_logistic: class " + std::to_string(m) +
                                     " absent from labels");

    LogisticModel model;
    model.feat_mean = X.colwise().mean();
    Vector var = (X.rowwise() - model.feat_mean.transpose()).array().square().colwise().sum() /
                 static_cast<double>(n);
    model.feat_std = var.array().sqrt().max(1e-8);

    Matrix Xa(n, d + 1);
    Xa.leftCols(d) = (X.rowwise() - model.feat_mean.transpose()).array().rowwise() /
                     model.feat_std.transpose().array();
    Xa.col(d).setOnes();

    Matrix w = Matrix::Zero(L, d + 1);
    int it = 0;
    double loss = logistic_loss(w, Xa, y, hyper.l2);
    model.loss_history.push_back(loss);
    for (; it < hyper.max_iters; ++it) {
        const Matrix g = logistic_gradient(w, Xa, y, hyper.l2);
        if (g.cwiseAbs().maxCoeff() < hyper.tol) break;
        w -= hyper.lr * g;
        loss = logistic_loss(w, Xa, y, hyper.l2);
        if (!std::isfinite(loss))
            throw std::runtime_error("fit_logistic: non-finite loss at iteration " +
                                     std::to_string(it + 1));
        model.loss_history.push_back(loss);
    }
    model.weights = std::move(w);
    model.iters = it;
    model.final_loss = loss;
    return model;
}

inline std::vector<int> predict_logistic(const LogisticModel& model, const Matrix& X) {
    const Eigen::Index d = model.weights.cols() - 1;
    require(X.cols() == d, "predict_logistic: dimension mismatch");
    std::vector<int> out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        Vector xa(d + 1);
        xa.head(d) = (X.row(i).transpose() - model.feat_mean).array() / model.feat_std.array();
        xa[d] = 1.0;
        const Vector scores = model.weights * xa;
        Eigen::Index best = 0;
        for (Eigen::Index m = 1; m < scores.size(); ++m)
            if (scores[m] > scores[best]) best = m;
        out[i] = static_cast<int>(best);
    }
    return out;
}

/// 1-nearest-neighbor by Euclidean distance; distance ties keep the smaller
/// training index.
inline std::vector<int> fit_predict_nn(const Matrix& Xtrain, const std::vector<int>& ytrain,
                                       const Matrix& Xtest) {
    require(Xtrain.rows() >= 1, "fit_predict_nn: empty training set");
    require(Xtrain.cols() == Xtest.cols(), "fit_predict_nn: dimension mismatch");
    require(static_cast<Eigen::Index>(ytrain.size()) == Xtrain.rows(),
            "fit_predict_nn: label count mismatch");
    std::vector<int> out(Xtest.rows());
    for (Eigen::Index i = 0; i < Xtest.rows(); ++i) {
        Eigen::Index best = 0;
        double best_d = (Xtest.row(i) - Xtrain.row(0)).squaredNorm();
        for (Eigen::Index j = 1; j < Xtrain.rows(); ++j) {
            const double dj = (Xtest.row(i) - Xtrain.row(j)).squaredNorm();
            if (dj < best_d) {
                best_d = dj;
                best = j;
            }
        }
        out[i] = ytrain[best];
    }
    return out;
}

/// Same textual convention as the ridge export: header, weight rows, then
/// the standardization moments.
inline void save_logistic_model(const std::filesystem::path& path, const LogisticModel& model) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write model: " + path.string());
    auto fmt = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "transfall_logistic 1\n";
    os << model.weights.rows() << ' ' << (model.weights.cols() - 1) << ' ' << model.iters << ' '
       << fmt(model.final_loss) << '\n';
    for (Eigen::Index m = 0; m < model.weights.rows(); ++m) {
        for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
            if (j) os << ' ';
            os << fmt(model.weights(m, j));
        }
        os << '\n';
    }
    for (Eigen::Index j = 0; j < model.feat_mean.size(); ++j) {
        if (j) os << ' ';
        os << fmt(model.feat_mean[j]);
    }
    os << '\n';
    for (Eigen::Index j = 0; j < model.feat_std.size(); ++j) {
        if (j) os << ' ';
        os << fmt(model.feat_std[j]);
    }
    os << '\n';
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline LogisticModel load_logistic_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model: " + path.string());
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "transfall_logistic" || version != 1)
        throw std::runtime_error("not a transfall_logistic v1 file: " + path.string());
    Eigen::Index L = 0, d = 0;
    LogisticModel model;
    is >> L >> d >> model.iters >> model.final_loss;
    if (!is || L < 1 || d < 1) throw std::runtime_error("bad model header: " + path.string());
    model.weights.resize(L, d + 1);
    for (Eigen::Index m = 0; m < L; ++m)
        for (Eigen::Index j = 0; j <= d; ++j) is >> model.weights(m, j);
    model.feat_mean.resize(d);
    model.feat_std.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) is >> model.feat_mean[j];
    for (Eigen::Index j = 0; j < d; ++j) is >> model.feat_std[j];
    if (!is) throw std::runtime_error("truncated model: " + path.string());
    return model;
}

}  // namespace transfall
