#pragma once

// CSV and JSON helpers. Requires nlohmann/json.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "detect.hpp"
#include "errors.hpp"
#include "spectral.hpp"
#include "stats.hpp"

namespace evospec {

// Single numeric column, optional one-line header. Rows are file line numbers.
inline std::vector<double> parse_series_csv(std::istream& in) {
    std::vector<double> out;
    std::string line;
    long row = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string cell = detail::trim(line);
        if (cell.empty()) continue;
        if (cell.find(',') != std::string::npos) throw ParseError("row " + std::to_string(row) + ": expected a single column", row);
        std::size_t pos = 0;
        double v = 0.0;
        bool ok = true;
        try {
            v = std::stod(cell, &pos);
        } catch (const std::exception&) {
            ok = false;
        }
        ok = ok && pos == cell.size() && std::isfinite(v);
        if (!ok) {
            if (!seen_data && out.empty() && row == 1) {
                seen_data = true;  // header line
                continue;
            }
            throw ParseError("row " + std::to_string(row) + ": not a finite number: '" + cell + "'", row);
        }
        seen_data = true;
        out.push_back(v);
    }
    if (out.empty()) throw ParseError("no numeric data", row);
    return out;
}

inline std::vector<double> read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_series_csv(in);
}

inline void write_series_csv(std::ostream& os, const TimeSeries& x) {
    os << "x\n" << std::setprecision(17);
    for (double v : x.values()) os << v << '\n';
}

inline void write_spectrum_csv(std::ostream& os, const LocalSpectrum& s) {
    os << std::setprecision(12) << "j";
    for (double w : s.frequencies) os << ',' << w;
    os << '\n';
    for (std::size_t i = 0; i < s.time_indices.size(); ++i) {
        os << s.time_indices[i];
        for (std::size_t k = 0; k < s.frequencies.size(); ++k) os << ',' << s.estimates[i * s.frequencies.size() + k];
        os << '\n';
    }
}

inline nlohmann::json to_json(const TestReport& r) {
    nlohmann::json j;
    j["statistic"] = to_string(r.statistic);
    j["omega"] = r.omega;
    j["raw_max"] = r.raw_max;
    j["normalized"] = r.normalized;
    j["gamma_MT"] = r.gamma_MT;
    j["critical_value"] = r.critical_value;
    j["alpha"] = r.alpha;
    j["p_value"] = r.p_value;
    j["reject"] = r.reject;
    j["argmax_r"] = r.argmax_r;
    j["argmax_omega"] = r.argmax_omega;
    j["lrv_floored"] = r.lrv_floored;
    j["per_frequency"] = nlohmann::json::array();
    for (const auto& f : r.per_frequency)
        j["per_frequency"].push_back({{"omega", f.omega}, {"raw_max", f.raw_max}, {"normalized", f.normalized}, {"argmax_r", f.argmax_r}});
    return j;
}

inline nlohmann::json to_json(const ChangePointSet& s) {
    nlohmann::json j;
    j["m_hat"] = s.m_hat;
    j["estimates"] = nlohmann::json::array();
    for (const auto& e : s.estimates)
        j["estimates"].push_back({{"t", e.t_hat}, {"lambda", e.lambda_hat}, {"omega", e.omega_hat}, {"d", e.d_value}});
    j["trace"] = nlohmann::json::array();
    for (const auto& t : s.trace)
        j["trace"].push_back({{"iteration", t.iteration},
                              {"candidates", t.candidates},
                              {"gate_value", t.gate_value},
                              {"threshold", t.threshold},
                              {"proceed", t.proceed},
                              {"t_hat", t.t_hat}});
    j["refinements"] = nlohmann::json::array();
    for (const auto& r : s.refinements)
        j["refinements"].push_back({{"anchor", r.anchor}, {"draws", r.draws}, {"chosen", r.chosen}});
    return j;
}

}  // namespace evospec
