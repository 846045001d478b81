#pragma once

// Persistence formats.
//
// Trajectories are JSON Lines, one record per iteration:
//   {"session_id":"s001","strategy":"AI","iteration":0,"objectives":[5.0,5.0,5.0]}
// Records of one session are contiguous and iteration-sorted starting at 0.
//
// Analysis reports are JSON with every floating-point value written with 17
// significant digits, so a report re-parses to the identical doubles.

#include "objdyn/core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace objdyn::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// Fixed-precision JSON output

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_indent(std::string& out, int indent, int level) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * level), ' ');
}

inline void dump_17g(const json& j, std::string& out, int indent, int level) {
    switch (j.type()) {
        case json::value_t::number_float: out += format_double(j.get<double>()); return;
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            bool flat = true;
            for (const auto& e : j) flat = flat && !e.is_structured();
            out.push_back('[');
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += flat ? ", " : ",";
                if (!flat) write_indent(out, indent, level + 1);
                dump_17g(e, out, indent, level + 1);
                first = false;
            }
            if (!flat) write_indent(out, indent, level);
            out.push_back(']');
            return;
        }
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out.push_back('{');
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out.push_back(',');
                write_indent(out, indent, level + 1);
                out += json(key).dump();
                out += indent < 0 ? ":" : ": ";
                dump_17g(value, out, indent, level + 1);
                first = false;
            }
            write_indent(out, indent, level);
            out.push_back('}');
            return;
        }
        default: out += j.dump(); return;
    }
}

}  // namespace detail

/// Serializes with 17 significant digits for every float; NaN/inf become null.
inline std::string dump_17g(const json& j, int indent = 2) {
    std::string out;
    detail::dump_17g(j, out, indent, 0);
    return out;
}

inline double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

// ---------------------------------------------------------------------------
// Vectors and matrices (row-major nested arrays)

inline json to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Vector vector_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorKind::ParseError, "expected a numeric array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_or_nan(j[i]);
    return v;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorKind::ParseError, "expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorKind::ParseError, "ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number_or_nan(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

inline json to_json(const std::vector<std::complex<double>>& values) {
    json a = json::array();
    for (const auto& v : values) a.push_back(json::array({v.real(), v.imag()}));
    return a;
}

inline std::vector<std::complex<double>> complex_list_from_json(const json& j) {
    std::vector<std::complex<double>> out;
    for (const auto& pair : j) out.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    return out;
}

// ---------------------------------------------------------------------------
// Report documents

inline json to_json(const DriftModel& m) {
    json j;
    j["A_hat"] = to_json(m.A_hat);
    j["b_hat"] = to_json(m.b_hat);
    j["sigma_hat"] = to_json(m.sigma_hat);
    j["sample_count"] = m.sample_count;
    return j;
}

inline DriftModel drift_from_json(const json& j) {
    DriftModel m;
    m.A_hat = matrix_from_json(j.at("A_hat"));
    m.b_hat = vector_from_json(j.at("b_hat"));
    m.sigma_hat = matrix_from_json(j.at("sigma_hat"));
    m.sample_count = j.at("sample_count").get<std::size_t>();
    return m;
}

inline json to_json(const InterferenceMatrix& m) {
    json j;
    j["entries"] = to_json(m.entries);
    return j;
}

inline InterferenceMatrix interference_from_json(const json& j) { return {matrix_from_json(j.at("entries"))}; }

inline Regime regime_from_string(const std::string& s) {
    for (auto r : {Regime::Exponential, Regime::Oscillatory, Regime::Boundary, Regime::Unstable}) {
        if (s == to_string(r)) return r;
    }
    throw Error(ErrorKind::ParseError, "unknown regime '" + s + "'");
}

inline json to_json(const SpectrumReport& r) {
    json j;
    j["eigenvalues"] = to_json(r.eigenvalues);
    j["discrete_eigenvalues"] = to_json(r.discrete_eigenvalues);
    j["convergence_rate"] = r.convergence_rate;
    j["regime"] = to_string(r.regime);
    j["discrete_stable"] = r.discrete_stable;
    j["dt"] = r.dt;
    return j;
}

inline SpectrumReport spectrum_from_json(const json& j) {
    SpectrumReport r;
    r.eigenvalues = complex_list_from_json(j.at("eigenvalues"));
    r.discrete_eigenvalues = complex_list_from_json(j.at("discrete_eigenvalues"));
    r.convergence_rate = j.at("convergence_rate").get<double>();
    r.regime = regime_from_string(j.at("regime").get<std::string>());
    r.discrete_stable = j.at("discrete_stable").get<bool>();
    r.dt = j.at("dt").get<double>();
    return r;
}

inline json to_json(const PredictionReport& r) {
    json j;
    j["r_squared"] = r.r_squared;
    json per = json::array();
    for (double v : r.per_dimension_r_squared) per.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    j["per_dimension_r_squared"] = std::move(per);
    j["step_count"] = r.step_count;
    return j;
}

inline PredictionReport prediction_from_json(const json& j) {
    PredictionReport r;
    r.r_squared = j.at("r_squared").get<double>();
    for (const auto& v : j.at("per_dimension_r_squared")) r.per_dimension_r_squared.push_back(number_or_nan(v));
    r.step_count = j.at("step_count").get<std::size_t>();
    return r;
}

inline json to_json(const StrategySpec& s) {
    json j;
    j["id"] = s.id;
    j["drift_matrix"] = to_json(s.drift_matrix);
    j["drift_intercept"] = to_json(s.drift_intercept);
    j["diffusion"] = to_json(s.diffusion);
    return j;
}

inline StrategySpec strategy_from_json(const json& j) {
    StrategySpec s;
    s.id = j.at("id").get<std::string>();
    s.drift_matrix = matrix_from_json(j.at("drift_matrix"));
    s.drift_intercept = vector_from_json(j.at("drift_intercept"));
    s.diffusion = matrix_from_json(j.at("diffusion"));
    return s;
}

// ---------------------------------------------------------------------------
// Trajectory JSON Lines

inline json trajectory_record(const std::string& session_id, const std::string& strategy, std::size_t iteration,
                              const ObjectiveVector& objectives) {
    json j;
    j["session_id"] = session_id;
    j["strategy"] = strategy;
    j["iteration"] = iteration;
    j["objectives"] = to_json(objectives);
    return j;
}

inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
    for (std::size_t t = 0; t < traj.points.size(); ++t) {
        out << trajectory_record(traj.session_id, traj.strategy_id, t, traj.points[t]).dump() << '\n';
    }
}

inline void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
    for (const auto& t : trajectories) write_trajectory(out, t);
}

inline void write_session_set(std::ostream& out, const SessionSet& set) { write_trajectories(out, set.trajectories); }

/// Parses and validates trajectories. Rejects non-contiguous sessions,
/// iteration gaps, mixed strategies within a session and invalid points.
inline std::vector<Trajectory> read_trajectories(std::istream& in, const std::string& origin = "<input>") {
    std::vector<Trajectory> out;
    std::set<std::string> closed;
    std::string line;
    std::size_t line_no = 0;
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::ParseError, where() + e.what());
        }
        std::string session;
        std::string strategy;
        std::size_t iteration = 0;
        ObjectiveVector objectives;
        try {
            session = rec.at("session_id").get<std::string>();
            strategy = rec.at("strategy").get<std::string>();
            iteration = rec.at("iteration").get<std::size_t>();
            objectives = vector_from_json(rec.at("objectives"));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ParseError, where() + e.what());
        }

        if (out.empty() || out.back().session_id != session) {
            if (!out.empty()) closed.insert(out.back().session_id);
            if (closed.count(session)) {
                throw Error(ErrorKind::ParseError, where() + "records of session '" + session + "' are not contiguous");
            }
            out.push_back(Trajectory{session, strategy, {}});
        }
        auto& traj = out.back();
        if (traj.strategy_id != strategy) {
            throw Error(ErrorKind::ParseError, where() + "session '" + session + "' mixes strategies");
        }
        if (iteration != traj.points.size()) {
            throw Error(ErrorKind::ParseError, where() + "session '" + session + "' expected iteration " +
                                                   std::to_string(traj.points.size()) + ", got " +
                                                   std::to_string(iteration));
        }
        traj.points.push_back(std::move(objectives));
    }
    for (const auto& t : out) validate_trajectory(t);
    return out;
}

inline std::vector<Trajectory> read_trajectories_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    return read_trajectories(in, path);
}

/// Groups trajectories into one SessionSet per strategy (sorted by id),
/// preserving file order within each set.
inline std::map<std::string, SessionSet> group_by_strategy(const std::vector<Trajectory>& trajectories) {
    std::map<std::string, SessionSet> sets;
    for (const auto& t : trajectories) {
        auto& set = sets[t.strategy_id];
        if (set.trajectories.empty()) {
            set.strategy_id = t.strategy_id;
            set.dimension = t.dimension();
        }
        require_same_dimension(static_cast<Eigen::Index>(set.dimension), static_cast<Eigen::Index>(t.dimension()),
                               "session set");
        set.trajectories.push_back(t);
    }
    return sets;
}

}  // namespace objdyn::io
