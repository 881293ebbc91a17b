#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "heatlab/cubes.hpp"
#include "heatlab/decay.hpp"
#include "heatlab/dirichlet.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/version.hpp"

namespace heatlab {

using json = nlohmann::json;

/// Shortest round-trip decimal form, so emitted rows reproduce the computed
/// doubles bit for bit when parsed back.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

// -- DecayReport ------------------------------------------------------------

inline std::string rows_to_csv(const std::vector<DecayRow>& rows) {
    std::ostringstream os;
    os << "family,ell,p,t,norm,scaled_ratio\n";
    for (const auto& r : rows)
        os << r.family << ',' << r.ell << ',' << p_token(r.p) << ',' << format_double(r.t)
           << ',' << format_double(r.norm) << ',' << format_double(r.scaled_ratio) << '\n';
    return os.str();
}

inline std::vector<DecayRow> parse_csv_rows(const std::string& text) {
    std::vector<DecayRow> rows;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) return rows;
    if (line != "family,ell,p,t,norm,scaled_ratio")
        throw std::invalid_argument("parse_csv_rows: unexpected header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        DecayRow r;
        std::getline(ls, r.family, ',');
        std::getline(ls, field, ',');
        r.ell = std::stoi(field);
        std::getline(ls, field, ',');
        r.p = field == "inf" ? inf_p : std::stod(field);
        std::getline(ls, field, ',');
        r.t = std::stod(field);
        std::getline(ls, field, ',');
        r.norm = std::stod(field);
        std::getline(ls, field, ',');
        r.scaled_ratio = std::stod(field);
        rows.push_back(r);
    }
    return rows;
}

inline json report_to_json(const DecayReport& rep, bool with_timestamp = true) {
    json j;
    json cfg = json::object();
    for (const auto& [k, v] : rep.config) cfg[k] = v;
    j["config"] = cfg;
    j["version"] = version_string;
    j["rows"] = json::array();
    for (const auto& r : rep.rows)
        j["rows"].push_back({{"family", r.family},
                             {"ell", r.ell},
                             {"p", p_token(r.p)},
                             {"t", r.t},
                             {"norm", r.norm},
                             {"scaled_ratio", r.scaled_ratio}});
    j["slopes"] = json::array();
    for (const auto& s : rep.slopes)
        j["slopes"].push_back({{"family", s.family},
                               {"ell", s.ell},
                               {"p", p_token(s.p)},
                               {"slope", s.slope},
                               {"stderr", s.stderr_},
                               {"window_lo", s.window_lo},
                               {"window_hi", s.window_hi},
                               {"npoints", s.npoints}});
    j["verdicts"] = json::array();
    for (const auto& v : rep.verdicts)
        j["verdicts"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    j["residuals"] = json::array();
    for (const auto& e : rep.residuals) {
        json params = json::object();
        for (const auto& [k, v] : e.params) params[k] = v;
        j["residuals"].push_back({{"name", e.name}, {"value", e.value}, {"params", params}});
    }
    if (with_timestamp) {
        auto now = std::chrono::system_clock::now();
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
        j["timestamp"] = secs.count();
    }
    return j;
}

/// The determinism contract excludes only the timestamp.
inline std::string report_determinism_key(const DecayReport& rep) {
    json j = report_to_json(rep, false);
    return j.dump();
}

// -- grid functions and spectra ----------------------------------------------

inline std::string gridfunction_to_csv(const GridFunction& f) {
    std::ostringstream os;
    os << "x,y,value\n";
    for (int i = 0; i < f.grid->size(); ++i)
        os << format_double(f.grid->nodes[i][0]) << ','
           << format_double(f.grid->dim == 2 ? f.grid->nodes[i][1] : 0.0) << ','
           << format_double(f.values[i]) << '\n';
    return os.str();
}

inline json gridfunction_to_json(const GridFunction& f) {
    json j;
    j["domain"] = to_string(f.grid->kind);
    j["h"] = f.grid->h;
    json pts = json::array();
    for (int i = 0; i < f.grid->size(); ++i)
        pts.push_back({{"x", f.grid->nodes[i][0]},
                       {"y", f.grid->dim == 2 ? f.grid->nodes[i][1] : 0.0},
                       {"value", f.values[i]}});
    j["values"] = pts;
    return j;
}

inline std::string spectrum_to_csv(const SpectralDecomposition& S) {
    std::ostringstream os;
    os << "index,lambda\n";
    for (int i = 0; i < S.size(); ++i) os << i << ',' << format_double(S.lambda[i]) << '\n';
    return os.str();
}

/// Per-cube table for the cube experiments: block L^2 norms of a grid
/// function together with the per-cube weighted operator norm of a map T.
inline std::string cube_table_csv(const CubeDecomposition& D, const Eigen::VectorXd& u,
                                  const CMatrix& T, int alpha) {
    std::ostringstream os;
    os << "cube,l2_block_norm,weighted_norm\n";
    const double w = D.grid->weight();
    for (int c = 0; c < D.cube_count(); ++c) {
        double block = 0.0;
        for (int i : D.cube_nodes[c]) block += w * u[i] * u[i];
        os << c << ',' << format_double(std::sqrt(block)) << ','
           << format_double(detail::cube_weighted_block_norm(T, D, c, alpha)) << '\n';
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
    out << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace heatlab
