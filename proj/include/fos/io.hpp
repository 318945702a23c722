#pragma once

// File formats: JSON model/network files, trajectory CSV, fixed-precision
// number formatting, atomic writes and content digests.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "model.hpp"
#include "simulate.hpp"

namespace fos::io {

using json = nlohmann::ordered_json;

/// Locale-independent, 17 significant digits.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("cannot parse number '" + std::string(s) + "'");
    return v;
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

[[nodiscard]] inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

[[nodiscard]] inline double json_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ParseError("field '" + field + "' must be a number");
    return j.get<double>();
}

[[nodiscard]] inline const json& require(const json& obj, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError("missing field '" + key + "'");
    return obj.at(key);
}

[[nodiscard]] inline Vector vector_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw ParseError("field '" + field + "' must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = json_number(j[i], field);
    return v;
}

/// Row-major nested array. `cols_hint` fixes the width when there are no rows.
[[nodiscard]] inline Matrix matrix_from_json(const json& j, const std::string& field, Index cols_hint = 0) {
    if (!j.is_array()) throw ParseError("field '" + field + "' must be an array of rows");
    const Index rows = static_cast<Index>(j.size());
    if (rows == 0) return Matrix::Zero(0, cols_hint);
    if (!j[0].is_array()) throw ParseError("field '" + field + "' must be an array of rows");
    const Index cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ParseError("field '" + field + "' has ragged rows");
        for (Index c = 0; c < cols; ++c) m(i, c) = json_number(row[static_cast<std::size_t>(c)], field);
    }
    return m;
}

/// Scalar s means s * I, otherwise a nested array.
[[nodiscard]] inline Matrix weight_from_json(const json& j, const std::string& field, Index dim) {
    if (j.is_number()) return j.get<double>() * Matrix::Identity(dim, dim);
    Matrix m = matrix_from_json(j, field, dim);
    if (m.rows() != dim || m.cols() != dim)
        throw DimensionError("field '" + field + "' must be " + std::to_string(dim) + " x " + std::to_string(dim));
    return m;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

[[nodiscard]] inline json to_json(const FosModel& model) {
    json j;
    j["n"] = model.n();
    j["m"] = model.m();
    j["alpha"] = vector_to_json(model.alpha);
    j["A"] = matrix_to_json(model.A);
    j["B"] = matrix_to_json(model.B);
    j["Bw"] = matrix_to_json(model.Bw);
    return j;
}

[[nodiscard]] inline FosModel fos_model_from_json(const json& j) {
    const Index n = require(j, "n").get<Index>();
    const Index m = j.contains("m") ? j.at("m").get<Index>() : 0;
    FosModel model;
    model.alpha = vector_from_json(require(j, "alpha"), "alpha");
    model.A = matrix_from_json(require(j, "A"), "A", n);
    model.B = j.contains("B") ? matrix_from_json(j.at("B"), "B", m) : Matrix::Zero(n, m);
    if (model.B.rows() == n && model.B.cols() == 0 && m > 0) throw DimensionError("B must have m columns");
    model.Bw = j.contains("Bw") ? matrix_from_json(j.at("Bw"), "Bw", n) : Matrix::Identity(n, n);
    detail::require_dims(model.A.rows() == n, "model: A must have n rows");
    detail::require_dims(model.B.cols() == m, "model: B must have m columns");
    model.validate();
    return model;
}

namespace detail {

inline json terms_to_json(const std::vector<FracTerm>& terms) {
    json arr = json::array();
    for (const auto& t : terms) {
        json e;
        e["exponent"] = t.exponent;
        e["matrix"] = matrix_to_json(t.matrix);
        arr.push_back(std::move(e));
    }
    return arr;
}

inline std::vector<FracTerm> terms_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw ParseError("field '" + field + "' must be an array");
    std::vector<FracTerm> out;
    for (const auto& e : j)
        out.push_back({json_number(require(e, "exponent"), field + ".exponent"),
                       matrix_from_json(require(e, "matrix"), field + ".matrix")});
    return out;
}

}  // namespace detail

[[nodiscard]] inline json to_json(const MultiTermNetwork& net) {
    json j;
    j["state_terms"] = detail::terms_to_json(net.state_terms);
    j["input_terms"] = detail::terms_to_json(net.input_terms);
    j["disturbance_terms"] = detail::terms_to_json(net.disturbance_terms);
    j["C"] = matrix_to_json(net.C);
    return j;
}

[[nodiscard]] inline MultiTermNetwork network_from_json(const json& j) {
    MultiTermNetwork net;
    net.state_terms = detail::terms_from_json(require(j, "state_terms"), "state_terms");
    if (j.contains("input_terms")) net.input_terms = detail::terms_from_json(j.at("input_terms"), "input_terms");
    if (j.contains("disturbance_terms"))
        net.disturbance_terms = detail::terms_from_json(j.at("disturbance_terms"), "disturbance_terms");
    net.C = matrix_from_json(require(j, "C"), "C", net.n());
    net.validate();
    return net;
}

[[nodiscard]] inline json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(source + ": " + e.what());
    }
}

/// Canonical serialisation: fixed key order, two-space indent, trailing newline.
[[nodiscard]] inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write through a temporary file in the same directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ParseError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[nodiscard]] inline std::string hex_digest(std::string_view bytes) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes);
    return ss.str();
}

// ---------------------------------------------------------------------------
// Trajectory CSV:  t,x1..xn[,u1..um][,y1..yq]
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::string trajectory_csv(const Trajectory& traj) {
    const Index K = traj.steps();
    const Index n = traj.n();
    const Index m = traj.inputs.rows() == K ? traj.inputs.cols() : 0;
    const Index q = traj.outputs ? traj.outputs->cols() : 0;
    std::string out = "t";
    for (Index i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
    for (Index i = 0; i < m; ++i) out += ",u" + std::to_string(i + 1);
    for (Index i = 0; i < q; ++i) out += ",y" + std::to_string(i + 1);
    out += '\n';
    for (Index k = 0; k <= K; ++k) {
        out += format_double(static_cast<double>(k) * traj.dt);
        for (Index i = 0; i < n; ++i) out += ',' + format_double(traj.states(k, i));
        // the final row has no input; written as 0 so every row has the same width
        for (Index i = 0; i < m; ++i) out += ',' + format_double(k < K ? traj.inputs(k, i) : 0.0);
        for (Index i = 0; i < q; ++i) out += ',' + format_double((*traj.outputs)(k, i));
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

[[nodiscard]] inline Trajectory parse_trajectory_csv(const std::string& text) {
    std::vector<std::string_view> lines;
    for (auto& l : detail::split(text, '\n'))
        if (!detail::trim(l).empty()) lines.push_back(l);
    if (lines.empty()) throw ParseError("trajectory CSV is empty");
    const auto header = detail::split(detail::trim(lines[0]), ',');
    std::vector<Index> xcol, ucol, ycol;
    Index tcol = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto h = detail::trim(header[c]);
        if (h == "t") tcol = static_cast<Index>(c);
        else if (h.size() > 1 && h[0] == 'x') xcol.push_back(static_cast<Index>(c));
        else if (h.size() > 1 && h[0] == 'u') ucol.push_back(static_cast<Index>(c));
        else if (h.size() > 1 && h[0] == 'y') ycol.push_back(static_cast<Index>(c));
        else throw ParseError("unknown CSV column '" + std::string(h) + "'");
    }
    if (xcol.empty() && ycol.empty()) throw ParseError("trajectory CSV has neither state nor output columns");
    const Index rows = static_cast<Index>(lines.size()) - 1;
    if (rows < 1) throw ParseError("trajectory CSV has no data rows");
    Matrix data(rows, static_cast<Index>(header.size()));
    for (Index r = 0; r < rows; ++r) {
        const auto cells = detail::split(detail::trim(lines[static_cast<std::size_t>(r + 1)]), ',');
        if (cells.size() != header.size())
            throw ParseError("CSV row " + std::to_string(r + 2) + " has " + std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) data(r, static_cast<Index>(c)) = parse_double(cells[c]);
    }
    auto take = [&](const std::vector<Index>& cols, Index nrows) {
        Matrix m(nrows, static_cast<Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) m.col(static_cast<Index>(i)) = data.col(cols[i]).head(nrows);
        return m;
    };
    Trajectory t;
    t.states = take(xcol, rows);
    t.inputs = take(ucol, rows - 1);
    if (!ycol.empty()) t.outputs = take(ycol, rows);
    if (tcol >= 0 && rows > 1) t.dt = data(1, tcol) - data(0, tcol);
    if (!t.states.allFinite() || !t.inputs.allFinite() || (t.outputs && !t.outputs->allFinite()))
        throw ParseError("trajectory CSV contains non-finite values");
    return t;
}

}  // namespace fos::io
