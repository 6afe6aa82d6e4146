#pragma once

#include "transfall/types.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace transfall {

// ---------------------------------------------------------------------------
// Raw sensor streams
// ---------------------------------------------------------------------------

struct RawSample {
    double t = 0.0;           // seconds
    double ax = 0.0, ay = 0.0, az = 0.0;  // g-units
    int label = 0;
    int subject = 0;
    int device = 0;
};

/// A labeled tri-axial acceleration stream. Label ids index `label_names`,
/// which is kept sorted lexicographically so class ids are deterministic.
struct RawStream {
    std::vector<RawSample> samples;
    std::vector<std::string> label_names;
    std::vector<std::string> subject_names;
    std::vector<std::string> device_names;

    /// Remap label ids onto a caller-supplied alphabet (error if a label of
    /// this stream is not in it). Used to make ids consistent across files.
    void relabel(const std::vector<std::string>& alphabet) {
        std::vector<int> remap(label_names.size(), -1);
        for (std::size_t i = 0; i < label_names.size(); ++i) {
            auto it = std::find(alphabet.begin(), alphabet.end(), label_names[i]);
            if (it == alphabet.end())
                throw std::runtime_error("relabel: label '" + label_names[i] +
                                         "' missing from target alphabet");
            remap[i] = static_cast<int>(it - alphabet.begin());
        }
        for (auto& s : samples) s.label = remap[s.label];
        label_names = alphabet;
    }
};

/// Column-name map for CSV ingestion. Empty subject/device names mean the
/// file has no such column; a single "default" id is used instead.
struct CsvSchema {
    std::string timestamp = "timestamp";
    std::string ax = "ax";
    std::string ay = "ay";
    std::string az = "az";
    std::string label = "label";
    std::string subject = "subject";
    std::string device = "device";
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && issp(s[b])) ++b;
    return s.substr(b);
}

inline double parse_double(const std::string& field, const char* col, std::size_t line_no) {
    std::string f = trim(field);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size())
        throw std::runtime_error("malformed row at line " + std::to_string(line_no) +
                                 ": column '" + col + "' is not numeric ('" + f + "')");
    return v;
}

inline int intern(std::vector<std::string>& names, const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) return static_cast<int>(it - names.begin());
    names.push_back(name);
    return static_cast<int>(names.size() - 1);
}

}  // namespace detail

/// Load a labeled acceleration stream from a UTF-8 comma-separated file.
/// The header row is required; `schema` maps the expected roles onto column
/// names. Timestamps must be nondecreasing within each contiguous
/// (subject, device) run.
inline RawStream load_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty stream: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);
    auto col_of = [&](const std::string& name, bool required) -> int {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            if (required)
                throw std::runtime_error("CSV header of " + path.string() +
                                         " has no column '" + name + "'");
            return -1;
        }
        return static_cast<int>(it - header.begin());
    };
    const int c_t = col_of(schema.timestamp, true);
    const int c_ax = col_of(schema.ax, true);
    const int c_ay = col_of(schema.ay, true);
    const int c_az = col_of(schema.az, true);
    const int c_label = col_of(schema.label, true);
    const int c_subj = schema.subject.empty() ? -1 : col_of(schema.subject, false);
    const int c_dev = schema.device.empty() ? -1 : col_of(schema.device, false);

    RawStream stream;
    std::vector<std::string> raw_labels;  // per-sample label strings, interned later
    std::vector<int> raw_label_ids;
    std::vector<std::string> local_names;

    std::size_t line_no = 1;
    int prev_subj = -1, prev_dev = -1;
    double prev_t = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        const int needed = std::max({c_t, c_ax, c_ay, c_az, c_label, c_subj, c_dev});
        if (static_cast<int>(fields.size()) <= needed)
            throw std::runtime_error("malformed row at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(needed + 1) +
                                     " columns, got " + std::to_string(fields.size()));
        RawSample s;
        s.t = detail::parse_double(fields[c_t], "timestamp", line_no);
        s.ax = detail::parse_double(fields[c_ax], "ax", line_no);
        s.ay = detail::parse_double(fields[c_ay], "ay", line_no);
        s.az = detail::parse_double(fields[c_az], "az", line_no);
        const std::string label = detail::trim(fields[c_label]);
        if (label.empty())
            throw std::runtime_error("malformed row at line " + std::to_string(line_no) +
                                     ": empty label");
        s.subject = detail::intern(stream.subject_names,
                                   c_subj >= 0 ? detail::trim(fields[c_subj]) : "default");
        s.device = detail::intern(stream.device_names,
                                  c_dev >= 0 ? detail::trim(fields[c_dev]) : "default");
        if (s.subject == prev_subj && s.device == prev_dev && s.t < prev_t)
            throw std::runtime_error("timestamps decrease at line " + std::to_string(line_no));
        prev_subj = s.subject;
        prev_dev = s.device;
        prev_t = s.t;
        raw_label_ids.push_back(detail::intern(local_names, label));
        stream.samples.push_back(s);
    }
    if (stream.samples.empty()) throw std::runtime_error("empty stream: " + path.string());

    // assign class ids by sorted label name so they are deterministic
    stream.label_names = local_names;
    std::sort(stream.label_names.begin(), stream.label_names.end());
    std::vector<int> remap(local_names.size());
    for (std::size_t i = 0; i < local_names.size(); ++i) {
        auto it = std::lower_bound(stream.label_names.begin(), stream.label_names.end(),
                                   local_names[i]);
        remap[i] = static_cast<int>(it - stream.label_names.begin());
    }
    for (std::size_t i = 0; i < stream.samples.size(); ++i)
        stream.samples[i].label = remap[raw_label_ids[i]];
    return stream;
}

// ---------------------------------------------------------------------------
// Windowing and feature extraction
// ---------------------------------------------------------------------------

struct Window {
    Eigen::Matrix<double, Eigen::Dynamic, 3> frames;  // W x 3 acceleration
    int majority_label = 0;
    int subject = 0;
    int device = 0;
};

/// Split a stream into fixed-length windows with fractional overlap.
/// Windows start every ceil(length*(1-overlap)) samples; a window never
/// spans a (subject, device) boundary; trailing partial windows are dropped.
/// The window label is the modal sample label, ties to the smaller class id.
inline std::vector<Window> window(const RawStream& stream, int length, double overlap) {
    require(length >= 2, "window: length must be >= 2");
    require(overlap >= 0.0 && overlap < 1.0, "window: overlap must be in [0, 1)");
    const int step = std::max(1, length - static_cast<int>(std::floor(length * overlap + 1e-9)));

    std::vector<Window> out;
    const auto& ss = stream.samples;
    std::size_t run_begin = 0;
    while (run_begin < ss.size()) {
        std::size_t run_end = run_begin + 1;
        while (run_end < ss.size() && ss[run_end].subject == ss[run_begin].subject &&
               ss[run_end].device == ss[run_begin].device)
            ++run_end;
        const std::size_t n = run_end - run_begin;
        for (std::size_t start = 0; start + length <= n; start += step) {
            Window w;
            w.frames.resize(length, 3);
            std::vector<int> counts(stream.label_names.size(), 0);
            for (int k = 0; k < length; ++k) {
                const RawSample& s = ss[run_begin + start + k];
                w.frames(k, 0) = s.ax;
                w.frames(k, 1) = s.ay;
                w.frames(k, 2) = s.az;
                ++counts[s.label];
            }
            int best = 0;
            for (std::size_t c = 1; c < counts.size(); ++c)
                if (counts[c] > counts[best]) best = static_cast<int>(c);
            w.majority_label = best;
            w.subject = ss[run_begin].subject;
            w.device = ss[run_begin].device;
            out.push_back(std::move(w));
        }
        run_begin = run_end;
    }
    if (out.empty()) throw std::runtime_error("window: stream shorter than one window");
    return out;
}

inline constexpr int kFeatureDim = 16;

/// 16-dimensional window descriptor: mean, population std, min, max for each
/// axis (x, y, z) followed by the same four statistics of the magnitude
/// signal sqrt(ax^2 + ay^2 + az^2).
inline Vector extract_features(const Window& w) {
    require(w.frames.rows() > 0, "extract_features: empty window");
    const Eigen::Index n = w.frames.rows();
    Vector f(kFeatureDim);
    auto stats_into = [&](const Eigen::VectorXd& v, int at) {
        const double mean = v.mean();
        const double var = (v.array() - mean).square().sum() / static_cast<double>(n);
        f[at + 0] = mean;
        f[at + 1] = std::sqrt(var);
        f[at + 2] = v.minCoeff();
        f[at + 3] = v.maxCoeff();
    };
    for (int c = 0; c < 3; ++c) stats_into(w.frames.col(c), 4 * c);
    stats_into(w.frames.rowwise().norm(), 12);
    return f;
}

/// Stack per-window features into a dataset. `num_classes` must cover every
/// majority label present.
inline LabeledDataset dataset_from_windows(const std::vector<Window>& ws, int num_classes) {
    require(!ws.empty(), "dataset_from_windows: no windows");
    LabeledDataset d;
    d.features.resize(static_cast<Eigen::Index>(ws.size()), kFeatureDim);
    d.labels.resize(ws.size());
    d.num_classes = num_classes;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        d.features.row(static_cast<Eigen::Index>(i)) = extract_features(ws[i]).transpose();
        require(ws[i].majority_label >= 0 && ws[i].majority_label < num_classes,
                "dataset_from_windows: label out of range");
        d.labels[i] = ws[i].majority_label;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Synthetic covariate shift
// ---------------------------------------------------------------------------

/// Apply the per-dimension affine map x -> gains .* x + offsets, preserving
/// labels. With resample_n > 0 the output is built from resample_n rows drawn
/// with replacement, deterministic under `seed`.
inline LabeledDataset synth_shift(const LabeledDataset& source, const Vector& gains,
                                  const Vector& offsets, std::uint64_t seed,
                                  int resample_n = 0) {
    const Eigen::Index d = source.features.cols();
    require(gains.size() == d && offsets.size() == d, "synth_shift: dimension mismatch");
    require((gains.array() > 0.0).all(), "synth_shift: gains must be strictly positive");

    std::vector<Eigen::Index> rows;
    if (resample_n > 0) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<Eigen::Index> pick(0, source.features.rows() - 1);
        rows.resize(resample_n);
        for (auto& r : rows) r = pick(rng);
    } else {
        rows.resize(source.features.rows());
        for (Eigen::Index i = 0; i < source.features.rows(); ++i) rows[i] = i;
    }

    LabeledDataset out;
    out.num_classes = source.num_classes;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), d);
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) =
            source.features.row(rows[i]).array() * gains.transpose().array() +
            offsets.transpose().array();
        out.labels[i] = source.labels[rows[i]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature-matrix cache (flat little-endian binary)
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace detail

/// Write N, d as little-endian u64 followed by row-major little-endian f64.
inline void save_feature_cache(const std::filesystem::path& path, const Matrix& X) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write feature cache: " + path.string());
    detail::put_u64_le(os, static_cast<std::uint64_t>(X.rows()));
    detail::put_u64_le(os, static_cast<std::uint64_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            detail::put_u64_le(os, std::bit_cast<std::uint64_t>(X(i, j)));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline Matrix load_feature_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open feature cache: " + path.string());
    const auto n = detail::get_u64_le(is);
    const auto d = detail::get_u64_le(is);
    if (!is) throw std::runtime_error("truncated feature cache: " + path.string());
    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            X(i, j) = std::bit_cast<double>(detail::get_u64_le(is));
    if (!is) throw std::runtime_error("truncated feature cache: " + path.string());
    return X;
}

}  // namespace transfall
