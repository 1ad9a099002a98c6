#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "markovig/errors.hpp"
#include "markovig/linalg.hpp"
#include "markovig/pf.hpp"
#include "markovig/simulate.hpp"

namespace markovig {

using json = nlohmann::ordered_json;

// On-disk model description. Matrices are stored row-stochastic [from][to]
// and transposed on ingest to the internal [to][from] layout.
struct ModelFile {
    int states = 0;
    std::optional<TransitionKernel> kernel;
    std::vector<std::pair<std::string, Matrix>> generators;
    std::optional<Matrix> curved_c;   // embedding matrix, d x d'
    std::optional<Vector> curved_t0;  // embedding offset, length d
    std::optional<Vector> initial;
    std::optional<TransitionKernel> kernel2;  // second kernel for comparisons
    std::optional<TransitionKernel> kernel3;
};

namespace detail {

inline Matrix parse_matrix(const json& j, int rows, int cols, const std::string& key) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw input_error("key '" + key + "' must be a " + std::to_string(rows) + "-row matrix");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw input_error("key '" + key + "' row " + std::to_string(r) + " must have " +
                              std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c) {
            if (!row[c].is_number())
                throw input_error("key '" + key + "' has a non-numeric entry");
            m(r, c) = row[c].get<double>();
        }
    }
    return m;
}

inline Vector parse_vector(const json& j, int size, const std::string& key) {
    if (!j.is_array() || static_cast<int>(j.size()) != size)
        throw input_error("key '" + key + "' must be a vector of length " + std::to_string(size));
    Vector v(size);
    for (int i = 0; i < size; ++i) {
        if (!j[i].is_number()) throw input_error("key '" + key + "' has a non-numeric entry");
        v(i) = j[i].get<double>();
    }
    return v;
}

inline TransitionKernel parse_kernel(const json& j, int states, const std::string& key) {
    try {
        return TransitionKernel::from_rows(parse_matrix(j, states, states, key));
    } catch (const input_error& e) {
        throw input_error("key '" + key + "': " + e.what());
    }
}

}  // namespace detail

inline ModelFile parse_model_file(const json& j) {
    if (!j.is_object()) throw input_error("model file must be a JSON object");
    static const std::set<std::string> known = {"states",  "kernel", "generators", "curved",
                                               "initial", "kernel2", "kernel3"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw input_error("unknown model-file key '" + item.key() + "'");
    if (!j.contains("states") || !j["states"].is_number_integer())
        throw input_error("key 'states' (integer) is required");

    ModelFile mf;
    mf.states = j["states"].get<int>();
    if (mf.states < 2) throw input_error("key 'states' must be at least 2");
    if (j.contains("kernel")) mf.kernel = detail::parse_kernel(j["kernel"], mf.states, "kernel");
    if (j.contains("kernel2"))
        mf.kernel2 = detail::parse_kernel(j["kernel2"], mf.states, "kernel2");
    if (j.contains("kernel3"))
        mf.kernel3 = detail::parse_kernel(j["kernel3"], mf.states, "kernel3");

    if (j.contains("generators")) {
        if (!j["generators"].is_array()) throw input_error("key 'generators' must be an array");
        std::set<std::string> names;
        for (const auto& item : j["generators"]) {
            if (!item.is_object() || !item.contains("name") || !item.contains("matrix") ||
                !item["name"].is_string())
                throw input_error("each generator needs a 'name' and a 'matrix'");
            const std::string name = item["name"].get<std::string>();
            if (!names.insert(name).second)
                throw input_error("duplicate generator name '" + name + "'");
            mf.generators.emplace_back(
                name, detail::parse_matrix(item["matrix"], mf.states, mf.states, name)
                          .transpose());
        }
    }

    if (j.contains("curved")) {
        const auto& c = j["curved"];
        if (!c.is_object() || !c.contains("C") || !c.contains("t0"))
            throw input_error("key 'curved' needs 'C' and 't0'");
        const int d = static_cast<int>(mf.generators.size());
        if (d == 0) throw input_error("key 'curved' requires generators");
        if (!c["C"].is_array() || c["C"].empty() || !c["C"][0].is_array())
            throw input_error("key 'C' must be a matrix");
        const int dp = static_cast<int>(c["C"][0].size());
        mf.curved_c = detail::parse_matrix(c["C"], d, dp, "C");
        mf.curved_t0 = detail::parse_vector(c["t0"], d, "t0");
    }

    if (j.contains("initial")) {
        Vector v = detail::parse_vector(j["initial"], mf.states, "initial");
        if (v.minCoeff() < 0.0 || std::abs(v.sum() - 1.0) > 1e-12)
            throw input_error("key 'initial' must be a probability vector");
        mf.initial = std::move(v);
    }
    return mf;
}

inline ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw input_error("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model_file(j);
}

// --- report serialization ------------------------------------------------

namespace detail {

inline void append_double(std::string& out, double v) {
    if (!std::isfinite(v)) {  // JSON has no inf/nan literals
        out += "null";
        return;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

inline void append_json(std::string& out, const json& j) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& item : j.items()) {
                if (!first) out += ',';
                first = false;
                out += json(item.key()).dump();
                out += ':';
                append_json(out, item.value());
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                append_json(out, j[i]);
            }
            out += ']';
            break;
        }
        case json::value_t::number_float:
            append_double(out, j.get<double>());
            break;
        default:
            out += j.dump();  // ints, bools, strings, null
    }
}

}  // namespace detail

// Deterministic JSON text: fixed key order, floats at 17 significant digits,
// non-finite floats as null.
inline std::string dump_report(const json& j) {
    std::string out;
    detail::append_json(out, j);
    out += '\n';
    return out;
}

inline json json_vector(const Vector& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

// Matrices are reported row-stochastic [from][to], matching the file layout.
inline json json_matrix_rows(const Matrix& m_to_from) {
    json a = json::array();
    const Matrix t = m_to_from.transpose();
    for (int r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
        a.push_back(row);
    }
    return a;
}

// Plain (non-transposed) matrix dump for symmetric objects like Fisher blocks.
inline json json_matrix(const Matrix& m) {
    json a = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(row);
    }
    return a;
}

// FNV-1a over a canonical byte string of all inputs.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Monte Carlo trial dump: header then one row per trial (RFC 4180: CRLF line
// ends; numeric fields need no quoting).
inline void write_trials_csv(std::ostream& out, const MonteCarloReport& rep) {
    const int d = rep.eta_hats.empty() ? 0 : static_cast<int>(rep.eta_hats.front().size());
    out << "trial_index";
    for (int j = 1; j <= d; ++j) out << ",eta_hat_" << j;
    out << "\r\n";
    char buf[64];
    for (std::size_t t = 0; t < rep.eta_hats.size(); ++t) {
        out << t;
        for (int j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", rep.eta_hats[t](j));
            out << ',' << buf;
        }
        out << "\r\n";
    }
}

}  // namespace markovig
