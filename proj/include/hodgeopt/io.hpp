/**
 * File formats: complex JSON, point-cloud and matrix CSV, and the JSON
 * documents written by the command-line tool.
 */
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "hodgeopt/complex.hpp"
#include "hodgeopt/decomposition.hpp"
#include "hodgeopt/flow.hpp"
#include "hodgeopt/laplacian.hpp"
#include "hodgeopt/optimizer.hpp"
#include "hodgeopt/vietoris_rips.hpp"

namespace hodgeopt {

using Json = nlohmann::ordered_json;

/// Shortest round-trip text for a double (17 significant digits).
inline std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------- complexes

inline Json complex_to_json(const SimplicialComplex& complex)
{
    Json simplices = Json::object();
    for (int k = 0; k <= complex.dimension(); ++k) {
        Json list = Json::array();
        for (const Simplex& s : complex.simplices(k)) list.push_back(s.vertices());
        simplices[std::to_string(k)] = std::move(list);
    }
    return Json{{"dimension", complex.dimension()}, {"simplices", std::move(simplices)}};
}

inline SimplicialComplex complex_from_json(const Json& j)
{
    try {
        const int dim = j.at("dimension").get<int>();
        const Json& simplices = j.at("simplices");
        std::vector<std::vector<Simplex>> by_order(static_cast<std::size_t>(std::max(dim + 1, 0)));
        for (auto it = simplices.begin(); it != simplices.end(); ++it) {
            const int k = std::stoi(it.key());
            if (k < 0 || k > dim) throw ValidationError("simplex order " + it.key() + " exceeds dimension");
            for (const Json& s : it.value()) {
                std::vector<Vertex> v;
                for (const Json& x : s) {
                    const auto value = x.get<long long>();
                    if (value < 0) throw ValidationError("negative vertex label");
                    v.push_back(static_cast<Vertex>(value));
                }
                if (!std::is_sorted(v.begin(), v.end()))
                    throw ValidationError("vertices must be ascending within each simplex");
                Simplex simplex(v);
                if (simplex.order() != k)
                    throw ValidationError("simplex " + simplex.to_string() + " listed under order " + it.key());
                by_order[static_cast<std::size_t>(k)].push_back(std::move(simplex));
            }
        }
        return SimplicialComplex(std::move(by_order));
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed complex JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        if (dynamic_cast<const ValidationError*>(&e)) throw;
        throw ValidationError(std::string("malformed complex JSON: ") + e.what());
    }
}

inline Json parse_json(const std::string& text, const std::string& what)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(what + " is not valid JSON: " + e.what());
    }
}

inline SimplicialComplex read_complex(const std::filesystem::path& path)
{
    return complex_from_json(parse_json(read_text(path), path.string()));
}

inline void write_complex(const std::filesystem::path& path, const SimplicialComplex& complex)
{
    write_text(path, complex_to_json(complex).dump(1) + "\n");
}

// ---------------------------------------------------------------- CSV

/// All rows of a headerless numeric CSV; blank lines are skipped.
inline std::vector<std::vector<double>> parse_csv(const std::string& text, const std::string& what)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ValidationError(what + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd csv_matrix(const std::vector<std::vector<double>>& rows, const std::string& what)
{
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    const std::size_t cols = rows.front().size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw ValidationError(what + ": ragged row " + std::to_string(i + 1));
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

inline std::string matrix_to_csv(const Eigen::MatrixXd& m)
{
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

inline PointCloud read_point_cloud(const std::filesystem::path& path)
{
    return PointCloud(csv_matrix(parse_csv(read_text(path), path.string()), path.string()));
}

inline void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud)
{
    write_text(path, matrix_to_csv(cloud.points()));
}

/// A chain signal: one value per line, or a single comma-separated row.
inline Eigen::VectorXd read_signal(const std::filesystem::path& path)
{
    const auto rows = parse_csv(read_text(path), path.string());
    std::vector<double> flat;
    if (rows.size() == 1) flat = rows.front();
    else
        for (const auto& r : rows) {
            if (r.size() != 1) throw ValidationError(path.string() + ": expected one value per line");
            flat.push_back(r.front());
        }
    return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

// ---------------------------------------------------------------- JSON payloads

inline Json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Json to_json(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::VectorXd r = m.row(i).transpose();
        rows.push_back(to_json(r));
    }
    return rows;
}

inline Eigen::VectorXd vector_from_json(const Json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// {"0": [...], "1": [...], ...}
inline Json weights_to_json(const WeightAssignment& w)
{
    Json j = Json::object();
    for (int k = 0; k <= w.max_order(); ++k) j[std::to_string(k)] = to_json(w.order(k));
    return j;
}

/// Orders missing from the document default to unity.
inline WeightAssignment weights_from_json(const Json& j, const SimplicialComplex& complex)
{
    WeightAssignment w = WeightAssignment::uniform(complex);
    try {
        for (auto it = j.begin(); it != j.end(); ++it) w.set_order(std::stoi(it.key()), vector_from_json(it.value()));
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed weights JSON: ") + e.what());
    }
    return validated_weights(complex, w);
}

inline Json laplacian_envelope(const HodgeLaplacian& lap, const std::string& part, const Eigen::MatrixXd& m)
{
    return Json{{"order", lap.order()},
                {"part", part},
                {"shape", {m.rows(), m.cols()}},
                {"weights",
                 {{"lower", to_json(lap.lower_weights())},
                  {"order", to_json(lap.weights())},
                  {"upper", to_json(lap.upper_weights())}}},
                {"matrix", to_json(m)}};
}

inline Json report_to_json(const DecompositionReport& r)
{
    return Json{{"reconstruction_residual", r.reconstruction_residual},
                {"relative_reconstruction", r.relative_reconstruction},
                {"harmonic_residual", r.harmonic_residual},
                {"relative_harmonic_residual", r.relative_harmonic_residual},
                {"gradient_harmonic", r.gradient_harmonic},
                {"gradient_curl", r.gradient_curl},
                {"harmonic_curl", r.harmonic_curl},
                {"max_orthogonality", r.max_orthogonality}};
}

inline Json decomposition_to_json(const HodgeComponents& parts, const DecompositionReport& report)
{
    return Json{{"order", parts.order},
                {"gradient", to_json(parts.gradient)},
                {"harmonic", to_json(parts.harmonic)},
                {"curl", to_json(parts.curl)},
                {"lower_potential", to_json(parts.lower_potential)},
                {"upper_potential", to_json(parts.upper_potential)},
                {"verification", report_to_json(report)}};
}

inline Json certificate_to_json(const SdpSolution& s)
{
    return Json{{"status", to_string(s.status)},
                {"primal_objective", s.primal_objective},
                {"dual_objective", s.dual_objective},
                {"duality_gap", s.duality_gap},
                {"relative_gap", s.relative_gap},
                {"min_eigenvalue", s.min_eigenvalue},
                {"psd_violation", s.psd_violation},
                {"equality_residual", s.equality_residual},
                {"dual_residual", s.dual_residual},
                {"iterations", s.iterations},
                {"seconds", s.seconds}};
}

inline Json optimization_to_json(const WeightOptimizationResult& r)
{
    Json weights = Json::object();
    if (r.flags.lower) {
        weights["lower"] = to_json(r.lower_weights);
        weights["lower_reciprocal"] = to_json(r.lower_decision);
    }
    if (r.flags.upper) weights["upper"] = to_json(r.upper_weights);
    return Json{{"order", r.order},
                {"objective", to_string(r.objective)},
                {"optimize", {{"lower", r.flags.lower}, {"upper", r.flags.upper}}},
                {"weights", std::move(weights)},
                {"sdp_objective", r.sdp_objective},
                {"direct_objective", r.direct_objective},
                {"uniform_objective", r.uniform_objective},
                {"improvement_percent", r.improvement_percent},
                {"relative_disagreement", r.relative_disagreement},
                {"accurate", r.accurate},
                {"clamped_weights", r.clamped},
                {"certificate", certificate_to_json(r.certificate)}};
}

/// Time, then the state columns, then optionally the three component norms.
inline std::string flow_to_csv(const FlowTrajectory& t, const FlowComponentTrace* components = nullptr)
{
    std::string out;
    for (Eigen::Index i = 0; i < t.times.size(); ++i) {
        out += format_double(t.times[i]);
        for (Eigen::Index j = 0; j < t.states.cols(); ++j) out += ',' + format_double(t.states(i, j));
        if (components) {
            out += ',' + format_double(components->gradient_norm[i]);
            out += ',' + format_double(components->harmonic_norm[i]);
            out += ',' + format_double(components->curl_norm[i]);
        }
        out += '\n';
    }
    return out;
}

} // namespace hodgeopt
