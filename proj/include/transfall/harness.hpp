#pragma once

#include "transfall/data.hpp"
#include "transfall/label_transfer.hpp"
#include "transfall/model_generation.hpp"
#include "transfall/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace transfall::harness {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

/// Predicate over (subject, device, dataset) names; an empty list matches
/// everything for that field.
struct Selector {
    std::vector<std::string> subjects;
    std::vector<std::string> devices;
    std::vector<std::string> datasets;

    bool matches(const std::string& subject, const std::string& device,
                 const std::string& dataset) const {
        auto in = [](const std::vector<std::string>& v, const std::string& s) {
            return v.empty() || std::find(v.begin(), v.end(), s) != v.end();
        };
        return in(subjects, subject) && in(devices, device) && in(datasets, dataset);
    }
};

struct Hyper {
    double lambda = 0.1;
    std::optional<double> epsilon;     // unset: (sqrt(Ns)-1)/sqrt(Ns)
    std::optional<double> bandwidth;   // unset: median heuristic
    int window = 128;
    double overlap = 0.5;
    std::uint64_t seed = 0;
    std::string eval_split = "same_window";  // or "held_out"
    double qp_cap = 1000.0;
    int qp_max_iters = 20000;
    double qp_tol = 1e-7;
    double qp_jitter = 1e-8;
    LogisticHyper logistic;
};

struct ScenarioConfig {
    std::string name;
    std::string group;  // aggregation key for the summary table
    std::string pipeline = "transfall";  // transfall | no_adaptation | kmm_only |
                                         // vertical_only | nn | lr
    Selector source;
    Selector target;
    Hyper hyper;
    bool allow_overlap = false;
    bool dump_kmm_diagnostics = false;
    json echo;  // the raw scenario object as configured
};

struct HarnessConfig {
    CsvSchema schema;
    std::vector<ScenarioConfig> scenarios;
};

namespace detail {

inline Selector parse_selector(const json& j) {
    Selector s;
    if (j.contains("subjects")) s.subjects = j["subjects"].get<std::vector<std::string>>();
    if (j.contains("devices")) s.devices = j["devices"].get<std::vector<std::string>>();
    if (j.contains("datasets")) s.datasets = j["datasets"].get<std::vector<std::string>>();
    return s;
}

inline Hyper parse_hyper(const json& j) {
    Hyper h;
    if (j.contains("lambda")) h.lambda = j["lambda"].get<double>();
    if (j.contains("epsilon") && !j["epsilon"].is_null())
        h.epsilon = j["epsilon"].get<double>();
    if (j.contains("bandwidth") && !j["bandwidth"].is_null()) {
        if (j["bandwidth"].is_string()) {
            if (j["bandwidth"].get<std::string>() != "median")
                throw std::runtime_error("hyper.bandwidth must be \"median\" or a number");
        } else {
            h.bandwidth = j["bandwidth"].get<double>();
        }
    }
    if (j.contains("window")) h.window = j["window"].get<int>();
    if (j.contains("overlap")) h.overlap = j["overlap"].get<double>();
    if (j.contains("seed")) h.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("eval_split")) h.eval_split = j["eval_split"].get<std::string>();
    if (j.contains("qp")) {
        const json& q = j["qp"];
        if (q.contains("cap")) h.qp_cap = q["cap"].get<double>();
        if (q.contains("max_iters")) h.qp_max_iters = q["max_iters"].get<int>();
        if (q.contains("tol")) h.qp_tol = q["tol"].get<double>();
        if (q.contains("jitter")) h.qp_jitter = q["jitter"].get<double>();
    }
    if (j.contains("logistic")) {
        const json& l = j["logistic"];
        if (l.contains("lr")) h.logistic.lr = l["lr"].get<double>();
        if (l.contains("l2")) h.logistic.l2 = l["l2"].get<double>();
        if (l.contains("max_iters")) h.logistic.max_iters = l["max_iters"].get<int>();
        if (l.contains("tol")) h.logistic.tol = l["tol"].get<double>();
    }
    if (h.eval_split != "same_window" && h.eval_split != "held_out")
        throw std::runtime_error("hyper.eval_split must be same_window or held_out");
    return h;
}

}  // namespace detail

inline HarnessConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path.string());
    json root = json::parse(is);
    if (!root.contains("schema_version") || root["schema_version"].get<int>() != 1)
        throw std::runtime_error("config must declare schema_version 1");

    HarnessConfig cfg;
    if (root.contains("csv")) {
        const json& c = root["csv"];
        auto get = [&](const char* key, std::string& into) {
            if (c.contains(key)) into = c[key].get<std::string>();
        };
        get("timestamp", cfg.schema.timestamp);
        get("ax", cfg.schema.ax);
        get("ay", cfg.schema.ay);
        get("az", cfg.schema.az);
        get("label", cfg.schema.label);
        get("subject", cfg.schema.subject);
        get("device", cfg.schema.device);
    }

    if (!root.contains("scenarios") || !root["scenarios"].is_array() ||
        root["scenarios"].empty())
        throw std::runtime_error("config needs a nonempty scenarios array");
    std::set<std::string> names;
    for (const json& sj : root["scenarios"]) {
        ScenarioConfig s;
        s.name = sj.at("name").get<std::string>();
        if (!names.insert(s.name).second)
            throw std::runtime_error("duplicate scenario name: " + s.name);
        s.group = sj.contains("group") ? sj["group"].get<std::string>() : s.name;
        if (sj.contains("pipeline")) s.pipeline = sj["pipeline"].get<std::string>();
        s.source = detail::parse_selector(sj.at("source"));
        s.target = detail::parse_selector(sj.at("target"));
        if (sj.contains("hyper")) s.hyper = detail::parse_hyper(sj["hyper"]);
        if (sj.contains("allow_overlap")) s.allow_overlap = sj["allow_overlap"].get<bool>();
        if (sj.contains("dump_kmm_diagnostics"))
            s.dump_kmm_diagnostics = sj["dump_kmm_diagnostics"].get<bool>();
        s.echo = sj;
        cfg.scenarios.push_back(std::move(s));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    require(truth.size() == pred.size() && !truth.empty(), "accuracy: size mismatch");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == pred[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

inline std::vector<double> per_class_recall(const std::vector<int>& truth,
                                            const std::vector<int>& pred, int L) {
    std::vector<double> hit(L, 0.0), total(L, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        total[truth[i]] += 1.0;
        if (truth[i] == pred[i]) hit[truth[i]] += 1.0;
    }
    std::vector<double> out(L, 0.0);
    for (int m = 0; m < L; ++m) out[m] = total[m] > 0.0 ? hit[m] / total[m] : 0.0;
    return out;
}

/// Linear-interpolation percentile of an unsorted sample, q in [0, 1].
inline double percentile(std::vector<double> v, double q) {
    require(!v.empty(), "percentile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

// ---------------------------------------------------------------------------
// Run execution
// ---------------------------------------------------------------------------

struct RunReport {
    std::string name, group, pipeline, eval_split;
    bool failed = false;
    std::string error;
    double labeling_accuracy = 0.0;
    double classification_accuracy = 0.0;
    std::vector<double> per_class_recall;
    std::vector<std::string> class_names;
    int source_windows = 0;
    int target_windows = 0;
    double bandwidth = 0.0;
    bool kmm_converged = true;
    int kmm_iterations = 0;
    double kmm_residual = 0.0;
    json config_echo;
    std::map<std::string, double> stage_timings_ms;
    // per target window: (true, estimated, predicted) class ids; the row
    // index is the window id
    std::vector<std::array<int, 3>> predictions;
    std::vector<std::pair<double, double>> kmm_history;
};

namespace detail {

struct WindowTable {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> subject, device, dataset;  // names per row
    std::vector<std::string> label_names;
};

inline WindowTable build_window_table(const std::filesystem::path& data_root,
                                      const CsvSchema& schema, int window_len,
                                      double overlap) {
    std::vector<std::pair<std::string, RawStream>> streams;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(data_root))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error("no .csv files under " + data_root.string());
    for (const auto& f : files) streams.emplace_back(f.stem().string(), load_csv(f, schema));

    std::set<std::string> alphabet_set;
    for (const auto& [id, s] : streams)
        alphabet_set.insert(s.label_names.begin(), s.label_names.end());
    const std::vector<std::string> alphabet(alphabet_set.begin(), alphabet_set.end());

    WindowTable t;
    t.label_names = alphabet;
    std::vector<Window> all;
    std::vector<std::size_t> stream_of;
    for (std::size_t si = 0; si < streams.size(); ++si) {
        streams[si].second.relabel(alphabet);
        auto ws = window(streams[si].second, window_len, overlap);
        for (auto& w : ws) {
            all.push_back(std::move(w));
            stream_of.push_back(si);
        }
    }
    t.features.resize(static_cast<Eigen::Index>(all.size()), kFeatureDim);
    t.labels.resize(all.size());
    t.subject.resize(all.size());
    t.device.resize(all.size());
    t.dataset.resize(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& s = streams[stream_of[i]].second;
        t.features.row(static_cast<Eigen::Index>(i)) = extract_features(all[i]).transpose();
        t.labels[i] = all[i].majority_label;
        t.subject[i] = s.subject_names[all[i].subject];
        t.device[i] = s.device_names[all[i].device];
        t.dataset[i] = streams[stream_of[i]].first;
    }
    return t;
}

inline std::vector<std::size_t> select_rows(const WindowTable& t, const Selector& sel) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < t.labels.size(); ++i)
        if (sel.matches(t.subject[i], t.device[i], t.dataset[i])) rows.push_back(i);
    return rows;
}

// Fit a logistic model on labels that may not cover every class: classes are
// compressed to those present, and predictions are mapped back.
inline std::vector<int> fit_predict_logistic_subset(const Matrix& Xtrain,
                                                    const std::vector<int>& ytrain,
                                                    const Matrix& Xeval,
                                                    const LogisticHyper& hyper) {
    std::set<int> present_set(ytrain.begin(), ytrain.end());
    const std::vector<int> present(present_set.begin(), present_set.end());
    std::map<int, int> to_compact;
    for (std::size_t i = 0; i < present.size(); ++i) to_compact[present[i]] = static_cast<int>(i);
    std::vector<int> compact(ytrain.size());
    for (std::size_t i = 0; i < ytrain.size(); ++i) compact[i] = to_compact[ytrain[i]];
    const LogisticModel model =
        fit_logistic(Xtrain, compact, static_cast<int>(present.size()), hyper);
    std::vector<int> pred = predict_logistic(model, Xeval);
    for (auto& p : pred) p = present[p];
    return pred;
}

}  // namespace detail

/// Execute one scenario: ingest, window, run the selected label-transfer
/// pipeline, train the downstream logistic model on the estimated labels,
/// and score both against target ground truth (which is never used for
/// training). Deterministic under the configured seed.
inline RunReport run_scenario(const ScenarioConfig& cfg,
                              const std::filesystem::path& data_root,
                              const CsvSchema& schema = {}) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    RunReport rep;
    rep.name = cfg.name;
    rep.group = cfg.group;
    rep.pipeline = cfg.pipeline;
    rep.eval_split = cfg.hyper.eval_split;
    rep.config_echo = cfg.echo;

    auto t0 = clock::now();
    const detail::WindowTable table =
        detail::build_window_table(data_root, schema, cfg.hyper.window, cfg.hyper.overlap);
    rep.stage_timings_ms["ingest"] = ms_since(t0);

    const auto src_rows = detail::select_rows(table, cfg.source);
    const auto tgt_rows = detail::select_rows(table, cfg.target);
    if (src_rows.empty()) throw std::runtime_error(cfg.name + ": source selector is empty");
    if (tgt_rows.empty()) throw std::runtime_error(cfg.name + ": target selector is empty");
    if (!cfg.allow_overlap) {
        std::set<std::string> src_keys;
        for (auto r : src_rows)
            src_keys.insert(table.subject[r] + "\x1f" + table.device[r] + "\x1f" + table.dataset[r]);
        for (auto r : tgt_rows)
            if (src_keys.count(table.subject[r] + "\x1f" + table.device[r] + "\x1f" +
                               table.dataset[r]))
                throw std::runtime_error(cfg.name +
                                         ": source and target selectors overlap on (" +
                                         table.subject[r] + ", " + table.device[r] + ", " +
                                         table.dataset[r] + "); set allow_overlap to permit");
    }

    // compress the label alphabet to classes seen in this run; every target
    // class must be covered by the source
    std::set<int> src_classes, tgt_classes;
    for (auto r : src_rows) src_classes.insert(table.labels[r]);
    for (auto r : tgt_rows) tgt_classes.insert(table.labels[r]);
    for (int c : tgt_classes)
        if (!src_classes.count(c))
            throw std::runtime_error(cfg.name + ": class '" + table.label_names[c] +
                                     "' present in target but absent in source");
    std::vector<int> classes(src_classes.begin(), src_classes.end());
    std::map<int, int> compact;
    for (std::size_t i = 0; i < classes.size(); ++i) compact[classes[i]] = static_cast<int>(i);
    const int L = static_cast<int>(classes.size());
    for (int c : classes) rep.class_names.push_back(table.label_names[c]);

    LabeledDataset source;
    source.num_classes = L;
    source.features.resize(static_cast<Eigen::Index>(src_rows.size()), table.features.cols());
    source.labels.resize(src_rows.size());
    for (std::size_t i = 0; i < src_rows.size(); ++i) {
        source.features.row(static_cast<Eigen::Index>(i)) = table.features.row(src_rows[i]);
        source.labels[i] = compact[table.labels[src_rows[i]]];
    }
    Matrix Xt(static_cast<Eigen::Index>(tgt_rows.size()), table.features.cols());
    std::vector<int> yt_true(tgt_rows.size());
    for (std::size_t i = 0; i < tgt_rows.size(); ++i) {
        Xt.row(static_cast<Eigen::Index>(i)) = table.features.row(tgt_rows[i]);
        yt_true[i] = compact[table.labels[tgt_rows[i]]];
    }
    rep.source_windows = static_cast<int>(src_rows.size());
    rep.target_windows = static_cast<int>(tgt_rows.size());

    // label estimation
    t0 = clock::now();
    std::vector<int> estimated;
    Matrix Xt_scored = Xt;
    if (cfg.pipeline == "nn") {
        estimated = fit_predict_nn(source.features, source.labels, Xt);
    } else if (cfg.pipeline == "lr") {
        estimated = detail::fit_predict_logistic_subset(source.features, source.labels, Xt,
                                                        cfg.hyper.logistic);
    } else {
        PipelineConfig pc;
        pc.variant = pipeline_variant_from(cfg.pipeline);
        pc.lambda = cfg.hyper.lambda;
        pc.bandwidth = cfg.hyper.bandwidth;
        pc.qp.epsilon = cfg.hyper.epsilon;
        pc.qp.cap = cfg.hyper.qp_cap;
        pc.qp.max_iters = cfg.hyper.qp_max_iters;
        pc.qp.tol = cfg.hyper.qp_tol;
        pc.qp.jitter = cfg.hyper.qp_jitter;
        pc.qp.record_history = cfg.dump_kmm_diagnostics;
        EstimateResult est = estimate_labels(source, Xt, pc);
        estimated = std::move(est.labels);
        Xt_scored = std::move(est.transformed_target);
        rep.bandwidth = est.bandwidth;
        rep.kmm_converged = est.kmm_converged;
        rep.kmm_iterations = est.kmm_iterations;
        rep.kmm_residual = est.kmm_residual;
        rep.kmm_history = std::move(est.kmm_history);
        for (const auto& [k, v] : est.stage_ms) rep.stage_timings_ms[k] = v;
    }
    rep.stage_timings_ms["label_estimation"] = ms_since(t0);
    rep.labeling_accuracy = accuracy(yt_true, estimated);

    // model generation on (X~t, Y^t); ground truth only scores the result
    t0 = clock::now();
    std::vector<int> predicted;
    std::vector<std::size_t> eval_rows(tgt_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) eval_rows[i] = i;
    if (cfg.hyper.eval_split == "held_out") {
        if (tgt_rows.size() < 2)
            throw std::runtime_error(cfg.name + ": held_out split needs >= 2 target windows");
        std::vector<std::size_t> idx = eval_rows;
        std::mt19937_64 rng(cfg.hyper.seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t ntrain = idx.size() / 2;
        std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + ntrain);
        eval_rows.assign(idx.begin() + ntrain, idx.end());
        std::sort(eval_rows.begin(), eval_rows.end());
        Matrix Xtr(static_cast<Eigen::Index>(train_idx.size()), Xt_scored.cols());
        std::vector<int> ytr(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) =
                Xt_scored.row(static_cast<Eigen::Index>(train_idx[i]));
            ytr[i] = estimated[train_idx[i]];
        }
        Matrix Xev(static_cast<Eigen::Index>(eval_rows.size()), Xt_scored.cols());
        for (std::size_t i = 0; i < eval_rows.size(); ++i)
            Xev.row(static_cast<Eigen::Index>(i)) =
                Xt_scored.row(static_cast<Eigen::Index>(eval_rows[i]));
        predicted = detail::fit_predict_logistic_subset(Xtr, ytr, Xev, cfg.hyper.logistic);
    } else {
        predicted = detail::fit_predict_logistic_subset(Xt_scored, estimated, Xt_scored,
                                                        cfg.hyper.logistic);
    }
    rep.stage_timings_ms["model_generation"] = ms_since(t0);

    std::vector<int> yt_eval(eval_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) yt_eval[i] = yt_true[eval_rows[i]];
    rep.classification_accuracy = accuracy(yt_eval, predicted);
    rep.per_class_recall = per_class_recall(yt_eval, predicted, L);

    rep.predictions.resize(eval_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i)
        rep.predictions[i] = {yt_true[eval_rows[i]], estimated[eval_rows[i]], predicted[i]};
    return rep;
}

/// Run scenarios concurrently up to `workers` threads; report order follows
/// config order and failures are captured per run.
inline std::vector<RunReport> run_matrix(const std::vector<ScenarioConfig>& cfgs,
                                         const std::filesystem::path& data_root,
                                         int workers = 1, const CsvSchema& schema = {}) {
    std::vector<RunReport> reports(cfgs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfgs.size()) return;
            try {
                reports[i] = run_scenario(cfgs[i], data_root, schema);
            } catch (const std::exception& e) {
                reports[i] = RunReport{};
                reports[i].name = cfgs[i].name;
                reports[i].group = cfgs[i].group;
                reports[i].pipeline = cfgs[i].pipeline;
                reports[i].config_echo = cfgs[i].echo;
                reports[i].failed = true;
                reports[i].error = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(cfgs.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Summaries and output files
// ---------------------------------------------------------------------------

struct GroupSummary {
    std::string group;
    int runs = 0;
    int failed = 0;
    double mean_labeling = 0.0, p25_labeling = 0.0, p75_labeling = 0.0;
    double mean_classification = 0.0, p25_classification = 0.0, p75_classification = 0.0;
};

/// Aggregate per scenario group: mean and 25th/75th percentiles of both
/// accuracies, in config order of first appearance. Failed runs are counted
/// but excluded from the statistics.
inline std::vector<GroupSummary> summarize(const std::vector<RunReport>& reports) {
    std::vector<GroupSummary> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : reports) {
        if (!index.count(r.group)) {
            index[r.group] = out.size();
            out.push_back(GroupSummary{r.group, 0, 0, 0, 0, 0, 0, 0, 0});
        }
    }
    for (auto& g : out) {
        std::vector<double> lab, cls;
        for (const auto& r : reports) {
            if (r.group != g.group) continue;
            ++g.runs;
            if (r.failed) {
                ++g.failed;
                continue;
            }
            lab.push_back(r.labeling_accuracy);
            cls.push_back(r.classification_accuracy);
        }
        if (lab.empty()) continue;
        const double n = static_cast<double>(lab.size());
        for (double v : lab) g.mean_labeling += v / n;
        for (double v : cls) g.mean_classification += v / n;
        g.p25_labeling = percentile(lab, 0.25);
        g.p75_labeling = percentile(lab, 0.75);
        g.p25_classification = percentile(cls, 0.25);
        g.p75_classification = percentile(cls, 0.75);
    }
    return out;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline json report_to_json(const RunReport& r) {
    json j;
    j["name"] = r.name;
    j["group"] = r.group;
    j["pipeline"] = r.pipeline;
    j["failed"] = r.failed;
    if (r.failed) {
        j["error"] = r.error;
        j["config_echo"] = r.config_echo;
        return j;
    }
    j["labeling_accuracy"] = r.labeling_accuracy;
    j["classification_accuracy"] = r.classification_accuracy;
    json recall = json::object();
    for (std::size_t m = 0; m < r.per_class_recall.size(); ++m)
        recall[r.class_names[m]] = r.per_class_recall[m];
    j["per_class_recall"] = recall;
    j["source_windows"] = r.source_windows;
    j["target_windows"] = r.target_windows;
    j["eval_split"] = r.eval_split;
    j["bandwidth"] = r.bandwidth;
    j["kmm_converged"] = r.kmm_converged;
    j["kmm_iterations"] = r.kmm_iterations;
    j["kmm_residual"] = r.kmm_residual;
    j["config_echo"] = r.config_echo;
    return j;
}

/// Write report.json, predictions.csv and the timing sidecar under
/// out_dir/<scenario name>/. Wall-clock timings live in the sidecar so the
/// report and predictions are bitwise reproducible under a fixed seed.
inline void write_run_outputs(const RunReport& r, const std::filesystem::path& out_dir) {
    const auto dir = out_dir / r.name;
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "report.json");
        if (!os) throw std::runtime_error("cannot write report under " + dir.string());
        os << report_to_json(r).dump(2) << '\n';
    }
    {
        std::ofstream os(dir / "timings.json");
        json t = json::object();
        for (const auto& [k, v] : r.stage_timings_ms) t[k] = v;
        os << t.dump(2) << '\n';
    }
    if (!r.failed) {
        std::ofstream os(dir / "predictions.csv");
        os << "window_id,true_label,estimated_label,predicted_label\n";
        for (std::size_t i = 0; i < r.predictions.size(); ++i)
            os << i << ',' << r.class_names[r.predictions[i][0]] << ','
               << r.class_names[r.predictions[i][1]] << ','
               << r.class_names[r.predictions[i][2]] << '\n';
    }
    if (!r.failed && !r.kmm_history.empty()) {
        std::ofstream os(dir / "kmm_diagnostics.csv");
        os << "iteration,objective,residual\n";
        for (std::size_t i = 0; i < r.kmm_history.size(); ++i)
            os << i << ',' << detail::fmt17(r.kmm_history[i].first) << ','
               << detail::fmt17(r.kmm_history[i].second) << '\n';
    }
}

inline void write_summary_csv(const std::vector<GroupSummary>& groups,
                              const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write summary: " + path.string());
    os << "group,runs,failed,mean_labeling,p25_labeling,p75_labeling,"
          "mean_classification,p25_classification,p75_classification\n";
    for (const auto& g : groups)
        os << g.group << ',' << g.runs << ',' << g.failed << ',' << detail::fmt17(g.mean_labeling)
           << ',' << detail::fmt17(g.p25_labeling) << ',' << detail::fmt17(g.p75_labeling) << ','
           << detail::fmt17(g.mean_classification) << ',' << detail::fmt17(g.p25_classification)
           << ',' << detail::fmt17(g.p75_classification) << '\n';
}

/// Rebuild RunReports from report.json files under a run directory
/// (used by the `report` subcommand to re-render summaries).
inline std::vector<RunReport> load_reports(const std::filesystem::path& out_dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(out_dir))
        if (e.is_regular_file() && e.path().filename() == "report.json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error("no report.json files under " + out_dir.string());
    std::vector<RunReport> reports;
    for (const auto& f : files) {
        std::ifstream is(f);
        json j = json::parse(is);
        RunReport r;
        r.name = j.at("name").get<std::string>();
        r.group = j.at("group").get<std::string>();
        r.pipeline = j.at("pipeline").get<std::string>();
        r.failed = j.at("failed").get<bool>();
        if (!r.failed) {
            r.labeling_accuracy = j.at("labeling_accuracy").get<double>();
            r.classification_accuracy = j.at("classification_accuracy").get<double>();
            for (const auto& [k, v] : j.at("per_class_recall").items()) {
                r.class_names.push_back(k);
                r.per_class_recall.push_back(v.get<double>());
            }
        } else {
            r.error = j.value("error", "");
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace transfall::harness
