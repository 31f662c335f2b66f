#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coupling.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "measure.hpp"
#include "objective.hpp"
#include "scalar.hpp"

namespace w2lab {
namespace io {

// Ordered maps keep serialization byte-stable across runs.
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Scalars.  Rational values travel as strings ("p/q", integers, or exact
// decimal strings); rational parsing rejects bare JSON decimal literals,
// whose text is lost to binary floating point before we ever see it.
// ---------------------------------------------------------------------------

template <class S>
json scalar_to_json(const S& x) {
    if constexpr (scalar_traits<S>::is_exact)
        return json(format_scalar(x));
    else
        return json(x);
}

template <class S>
S scalar_from_json(const json& j) {
    if (j.is_string()) return parse_scalar<S>(j.template get<std::string>());
    if (j.is_number_integer() || j.is_number_unsigned())
        return scalar_traits<S>::from_int(j.template get<long long>());
    if (j.is_number_float()) {
        const double v = j.template get<double>();
        if constexpr (scalar_traits<S>::is_exact) {
            if (std::floor(v) == v && std::fabs(v) < 9.0e15)
                return scalar_traits<S>::from_int(static_cast<long long>(v));
            throw ParseError("rational mode needs integers or quoted \"p/q\" strings, got " +
                             json(j).dump());
        } else {
            return v;
        }
    }
    throw ParseError("expected a number, got " + j.dump());
}

template <class S>
Point<S> point_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("expected a coordinate array, got " + j.dump());
    Point<S> p;
    p.reserve(j.size());
    for (const auto& c : j) p.push_back(scalar_from_json<S>(c));
    return p;
}

template <class S>
json point_to_json(const Point<S>& p) {
    json out = json::array();
    for (const auto& c : p) out.push_back(scalar_to_json(c));
    return out;
}

// ---------------------------------------------------------------------------
// Measures: {"dimension": d, "points": [[...], ...], "weights": [...],
//            "mode": "rational"|"float"}.
// ---------------------------------------------------------------------------

template <class S>
DiscreteMeasure<S> measure_from_json(const json& j) {
    if (!j.is_object() || !j.contains("points") || !j.contains("weights"))
        throw ParseError("a measure document needs \"points\" and \"weights\"");
    if (!j["points"].is_array() || !j["weights"].is_array())
        throw ParseError("\"points\" and \"weights\" must be arrays");
    std::vector<Point<S>> pts;
    for (const auto& p : j["points"]) pts.push_back(point_from_json<S>(p));
    std::vector<S> wts;
    for (const auto& w : j["weights"]) wts.push_back(scalar_from_json<S>(w));
    if (j.contains("dimension")) {
        const auto d = j["dimension"].template get<std::size_t>();
        for (const auto& p : pts)
            if (p.size() != d)
                throw ParseError("a point does not match the declared dimension");
    }
    return DiscreteMeasure<S>(std::move(pts), std::move(wts));
}

template <class S>
json measure_to_json(const DiscreteMeasure<S>& m) {
    json out = json::object();
    out["dimension"] = m.dimension();
    json pts = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) pts.push_back(point_to_json(m.point(i)));
    out["points"] = std::move(pts);
    json wts = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) wts.push_back(scalar_to_json(m.weight(i)));
    out["weights"] = std::move(wts);
    out["mode"] = scalar_traits<S>::mode_name();
    return out;
}

// ---------------------------------------------------------------------------
// Couplings and kernels: source and target measures plus a row-major matrix.
// ---------------------------------------------------------------------------

template <class S>
json matrix_rows_to_json(const std::vector<S>& flat, std::size_t rows, std::size_t cols) {
    json out = json::array();
    for (std::size_t i = 0; i < rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cols; ++j) row.push_back(scalar_to_json(flat[i * cols + j]));
        out.push_back(std::move(row));
    }
    return out;
}

template <class S>
std::vector<S> matrix_rows_from_json(const json& j, std::size_t rows, std::size_t cols) {
    if (!j.is_array() || j.size() != rows)
        throw ParseError("matrix must have one row per source atom");
    std::vector<S> flat;
    flat.reserve(rows * cols);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols)
            throw ParseError("matrix row has the wrong number of entries");
        for (const auto& v : row) flat.push_back(scalar_from_json<S>(v));
    }
    return flat;
}

template <class S>
json coupling_to_json(const Coupling<S>& pi) {
    json out = json::object();
    out["source"] = measure_to_json(pi.source);
    out["target"] = measure_to_json(pi.target);
    out["matrix"] = matrix_rows_to_json(pi.matrix, pi.rows(), pi.cols());
    return out;
}

template <class S>
Coupling<S> coupling_from_json(const json& j) {
    if (!j.is_object() || !j.contains("source") || !j.contains("target") || !j.contains("matrix"))
        throw ParseError("a coupling document needs \"source\", \"target\", and \"matrix\"");
    DiscreteMeasure<S> src = measure_from_json<S>(j["source"]);
    DiscreteMeasure<S> tgt = measure_from_json<S>(j["target"]);
    std::vector<S> flat = matrix_rows_from_json<S>(j["matrix"], src.size(), tgt.size());
    return Coupling<S>(std::move(src), std::move(tgt), std::move(flat));
}

template <class S>
json kernel_to_json(const Kernel<S>& k) {
    json out = json::object();
    out["source"] = measure_to_json(k.source);
    out["target"] = measure_to_json(k.target);
    out["rows"] = matrix_rows_to_json(k.rows, k.source.size(), k.target.size());
    return out;
}

// ---------------------------------------------------------------------------
// Convex objectives: {"builtin": "norm_sq"} or {"A": [[...]], "b": [...]}
// (b optional, defaults to zero).  The ambient dimension of the measures
// supplies the size of the builtin.
// ---------------------------------------------------------------------------

template <class S>
QuadraticObjective<S> objective_from_json(const json& j, std::size_t dimension) {
    if (!j.is_object()) throw ParseError("an objective document must be an object");
    if (j.contains("builtin")) {
        const std::string name = j["builtin"].template get<std::string>();
        if (name != "norm_sq") throw ParseError("unknown builtin objective '" + name + "'");
        return QuadraticObjective<S>::norm_sq(dimension);
    }
    if (!j.contains("A")) throw ParseError("an objective needs \"A\" or \"builtin\"");
    const json& ja = j["A"];
    if (!ja.is_array() || ja.empty()) throw ParseError("\"A\" must be a nonempty matrix");
    Matrix<S> A;
    for (const auto& row : ja) A.push_back(point_from_json<S>(row));
    Point<S> b(A.size(), S(0));
    if (j.contains("b")) b = point_from_json<S>(j["b"]);
    return QuadraticObjective<S>(std::move(A), std::move(b));
}

// ---------------------------------------------------------------------------
// File plumbing.
// ---------------------------------------------------------------------------

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

} // namespace io
} // namespace w2lab
