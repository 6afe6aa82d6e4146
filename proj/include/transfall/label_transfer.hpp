#pragma once

#include "transfall/data.hpp"
#include "transfall/kernel.hpp"
#include "transfall/kmm.hpp"
#include "transfall/types.hpp"
#include "transfall/vertical.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace transfall {

/// Weights below this floor are raised before inverting the weight diagonal.
inline constexpr double kBetaFloor = 1e-6;

/// One-vs-all weighted kernel ridge model: alphas(m, j) is the coefficient of
/// source sample j in the scorer of class m.
struct RidgeModel {
    Matrix alphas;  // L x N_s
    double lambda = 0.1;
    KernelConfig kernel;
    Matrix support;  // N_s x d source features the expansion runs over
};

/// Solve (lambda * diag(1/beta) + K) alpha_m = Y_m for every class, where
/// Y_m is the 0/1 indicator vector of class m. Uses a symmetric factorization
/// with one refinement step rather than an explicit inverse.
inline RidgeModel fit_ridge(const Matrix& K, const Vector& beta, const std::vector<int>& Ys,
                            int L, double lambda, const KernelConfig& kernel,
                            const Matrix& support) {
    const Eigen::Index n = K.rows();
    require(K.cols() == n, "fit_ridge: K must be square");
    require(static_cast<Eigen::Index>(Ys.size()) == n, "fit_ridge: label count mismatch");
    require(beta.size() == n, "fit_ridge: beta length mismatch");
    require(support.rows() == n, "fit_ridge: support row count mismatch");
    require(L >= 1, "fit_ridge: need at least one class");
    require(lambda > 0.0, "fit_ridge: lambda must be positive");

    std::vector<int> counts(L, 0);
    for (int y : Ys) {
        require(y >= 0 && y < L, "fit_ridge: label out of range");
        ++counts[y];
    }
    for (int m = 0; m < L; ++m)
        if (counts[m] == 0)
            throw std::runtime_error("fit_ridge: class " + std::to_string(m) +
                                     " absent from source labels");

    Matrix A = K;
    A.diagonal() += lambda * beta.cwiseMax(kBetaFloor).cwiseInverse();

    Matrix targets = Matrix::Zero(n, L);
    for (Eigen::Index i = 0; i < n; ++i) targets(i, Ys[i]) = 1.0;

    Eigen::LDLT<Matrix> ldlt(A);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-15) {
        std::ostringstream msg;
        msg << "fit_ridge: near-singular system, rcond = " << ldlt.rcond();
        throw std::runtime_error(msg.str());
    }
    Matrix alpha = ldlt.solve(targets);
    alpha += ldlt.solve(targets - A * alpha);  // refinement step

    RidgeModel model;
    model.alphas = alpha.transpose();
    model.lambda = lambda;
    model.kernel = kernel;
    model.support = support;
    return model;
}

struct Prediction {
    std::vector<int> labels;
    Matrix scores;  // N_t x L
};

/// score(i, m) = sum_j alphas(m, j) * k(x_j^s, x_i^t); label is the argmax
/// over classes, ties to the smaller class id.
inline Prediction predict(const RidgeModel& model, const Matrix& Xt) {
    require(Xt.cols() == model.support.cols(), "predict: dimension mismatch");
    const Eigen::Index nt = Xt.rows();
    const Eigen::Index ns = model.support.rows();
    const Eigen::Index L = model.alphas.rows();
    const double inv = 1.0 / (2.0 * model.kernel.bandwidth * model.kernel.bandwidth);

    Prediction out;
    out.scores.resize(nt, L);
    out.labels.resize(nt);
    Vector kvec(ns);
    for (Eigen::Index i = 0; i < nt; ++i) {
        for (Eigen::Index j = 0; j < ns; ++j)
            kvec[j] = std::exp(-(Xt.row(i) - model.support.row(j)).squaredNorm() * inv);
        out.scores.row(i) = (model.alphas * kvec).transpose();
        Eigen::Index best = 0;
        for (Eigen::Index m = 1; m < L; ++m)
            if (out.scores(i, m) > out.scores(i, best)) best = m;
        out.labels[i] = static_cast<int>(best);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline composition
// ---------------------------------------------------------------------------

enum class PipelineVariant {
    transfall,      // vertical + KMM + weighted ridge
    no_adaptation,  // plain ridge on raw features, uniform weights
    kmm_only,       // KMM weights, no vertical transform
    vertical_only,  // vertical transform, uniform weights
};

inline PipelineVariant pipeline_variant_from(const std::string& name) {
    if (name == "transfall") return PipelineVariant::transfall;
    if (name == "no_adaptation") return PipelineVariant::no_adaptation;
    if (name == "kmm_only") return PipelineVariant::kmm_only;
    if (name == "vertical_only") return PipelineVariant::vertical_only;
    throw std::invalid_argument("unknown pipeline variant: " + name);
}

struct PipelineConfig {
    PipelineVariant variant = PipelineVariant::transfall;
    double lambda = 0.1;
    QpSettings qp;
    std::optional<double> bandwidth;  // unset: median heuristic on [Xs; X~t]
};

struct EstimateResult {
    std::vector<int> labels;
    Matrix scores;
    Vector beta;
    Matrix transformed_target;  // X~t actually scored (equals Xt without vertical)
    RidgeModel model;
    double bandwidth = 0.0;
    bool kmm_converged = true;
    int kmm_iterations = 0;
    double kmm_residual = 0.0;
    std::vector<std::pair<double, double>> kmm_history;
    std::map<std::string, double> stage_ms;
};

/// End-to-end label estimation: vertical moment matching, bandwidth
/// selection, KMM reweighting, weighted ridge fit, one-vs-all prediction.
/// Variant toggles disable the vertical or KMM stages.
inline EstimateResult estimate_labels(const LabeledDataset& source, const Matrix& Xt,
                                      const PipelineConfig& cfg = {}) {
    require(source.features.cols() == Xt.cols(), "estimate_labels: dimension mismatch");
    require(Xt.rows() >= 1, "estimate_labels: empty target");
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    const bool use_vertical = cfg.variant == PipelineVariant::transfall ||
                              cfg.variant == PipelineVariant::vertical_only;
    const bool use_kmm = cfg.variant == PipelineVariant::transfall ||
                         cfg.variant == PipelineVariant::kmm_only;

    EstimateResult res;

    auto t0 = clock::now();
    if (use_vertical) {
        const DomainStats stats_s = fit_stats(source.features);
        const DomainStats stats_t = fit_stats(Xt);
        res.transformed_target = transform(Xt, stats_s, stats_t);
    } else {
        res.transformed_target = Xt;
    }
    res.stage_ms["vertical"] = ms_since(t0);

    t0 = clock::now();
    KernelConfig kernel;
    if (cfg.bandwidth) {
        require(*cfg.bandwidth > 0.0, "estimate_labels: bandwidth must be positive");
        kernel.bandwidth = *cfg.bandwidth;
    } else {
        Matrix both(source.features.rows() + res.transformed_target.rows(), Xt.cols());
        both << source.features, res.transformed_target;
        kernel.bandwidth = median_bandwidth(both);
    }
    res.bandwidth = kernel.bandwidth;
    const Matrix K = gram(kernel, source.features);
    res.stage_ms["kernel"] = ms_since(t0);

    t0 = clock::now();
    if (use_kmm) {
        const Vector kap = kappa(kernel, source.features, res.transformed_target);
        WeightVector w = solve_kmm(K, kap, cfg.qp);
        res.beta = std::move(w.beta);
        res.kmm_converged = w.converged;
        res.kmm_iterations = w.iterations;
        res.kmm_residual = w.kkt_residual;
        res.kmm_history = std::move(w.history);
    } else {
        res.beta = Vector::Ones(source.features.rows());
    }
    res.stage_ms["kmm"] = ms_since(t0);

    t0 = clock::now();
    res.model = fit_ridge(K, res.beta, source.labels, source.num_classes, cfg.lambda, kernel,
                          source.features);
    res.stage_ms["ridge_fit"] = ms_since(t0);

    t0 = clock::now();
    Prediction pred = predict(res.model, res.transformed_target);
    res.labels = std::move(pred.labels);
    res.scores = std::move(pred.scores);
    res.stage_ms["predict"] = ms_since(t0);
    return res;
}

// ---------------------------------------------------------------------------
// Textual model export
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Write the model as text: a header with (L, N_s, lambda, bandwidth), one
/// alpha row per class, and a reference to the support matrix, which is
/// stored next to the model in the flat binary cache format. The 17-digit
/// decimal encoding round-trips doubles bitwise.
inline void save_ridge_model(const std::filesystem::path& path, const RidgeModel& model) {
    const std::filesystem::path support_path = path.string() + ".support.bin";
    save_feature_cache(support_path, model.support);

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write model: " + path.string());
    os << "transfall_ridge 1\n";
    os << model.alphas.rows() << ' ' << model.alphas.cols() << ' '
       << detail::fmt17(model.lambda) << ' ' << detail::fmt17(model.kernel.bandwidth) << '\n';
    for (Eigen::Index m = 0; m < model.alphas.rows(); ++m) {
        for (Eigen::Index j = 0; j < model.alphas.cols(); ++j) {
            if (j) os << ' ';
            os << detail::fmt17(model.alphas(m, j));
        }
        os << '\n';
    }
    os << "support " << support_path.filename().string() << '\n';
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline RidgeModel load_ridge_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model: " + path.string());
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "transfall_ridge" || version != 1)
        throw std::runtime_error("not a transfall_ridge v1 file: " + path.string());
    Eigen::Index L = 0, ns = 0;
    RidgeModel model;
    is >> L >> ns >> model.lambda >> model.kernel.bandwidth;
    if (!is || L < 1 || ns < 1) throw std::runtime_error("bad model header: " + path.string());
    model.alphas.resize(L, ns);
    for (Eigen::Index m = 0; m < L; ++m)
        for (Eigen::Index j = 0; j < ns; ++j) is >> model.alphas(m, j);
    std::string key, ref;
    is >> key >> ref;
    if (!is || key != "support") throw std::runtime_error("bad support reference: " + path.string());
    model.support = load_feature_cache(path.parent_path() / ref);
    if (model.support.rows() != ns)
        throw std::runtime_error("support matrix size mismatch: " + path.string());
    return model;
}

}  // namespace transfall
