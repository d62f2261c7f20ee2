#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace evospec {

inline constexpr double pi = std::numbers::pi;

struct BreakTruth {
    int break_time;
    double frequency;
};

// Observations X_1..X_T stored zero-based.
class TimeSeries {
public:
    TimeSeries() = default;
    explicit TimeSeries(std::vector<double> values, std::vector<BreakTruth> truth = {})
        : values_(std::move(values)), truth_(std::move(truth)) {
        if (values_.size() < 2) throw SizeError("time series needs at least 2 observations");
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw ConfigError("non-finite observation at t=" + std::to_string(i + 1));
        int prev = 1;
        for (const auto& b : truth_) {
            if (b.break_time <= prev || b.break_time >= size())
                throw ConfigError("truth break times must be increasing and inside (1, T)");
            prev = b.break_time;
        }
    }

    int size() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<BreakTruth>& truth() const { return truth_; }
    // 1-based access, X_t.
    double at(int t) const { return values_[static_cast<std::size_t>(t - 1)]; }

    TimeSeries scaled(double c) const {
        std::vector<double> v = values_;
        for (double& e : v) e *= c;
        return TimeSeries(std::move(v), truth_);
    }

    TimeSeries demeaned() const {
        double mean = 0.0;
        for (double e : values_) mean += e;
        mean /= static_cast<double>(values_.size());
        std::vector<double> v = values_;
        for (double& e : v) e -= mean;
        return TimeSeries(std::move(v), truth_);
    }

private:
    std::vector<double> values_;
    std::vector<BreakTruth> truth_;
};

enum class Taper { Rectangular };
enum class SmootherKernel { Parzen, Bartlett, Uniform };
enum class LrvKernel { Bartlett };
// Stopping rule for the sequential detector: the minimax threshold from the
// consistency theory, or the extreme-value critical value of S_Dmax.
enum class GateRule { Minimax, ExtremeValue };

struct SpectralConfig {
    int T = 0;
    int m_T = 0;
    int n_T = 0;
    double b_WT = 0.0;
    int m_ST = 0;
    int M_ST = 0;
    int M_T = 0;
    Taper taper = Taper::Rectangular;
    SmootherKernel smoother_kernel = SmootherKernel::Parzen;
    LrvKernel lrv_kernel = LrvKernel::Bartlett;
    double b_1T = 0.0;
    int n_omega = 0;
    double epsilon_grid = 0.0;
    int K = 10;
    int v_T = 0;
    double theta = 1.0;
    double D_star = 2.1;
    double epsilon_f = 0.0;
    GateRule gate = GateRule::Minimax;
    double gate_alpha = 0.05;

    // Recompute m_ST, M_ST, M_T and b_1T from T and m_T.
    void derive() {
        m_ST = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m_T))));
        while ((m_ST + 1) * (m_ST + 1) <= m_T) ++m_ST;
        while (m_ST * m_ST > m_T) --m_ST;
        M_ST = m_ST > 0 ? m_T / m_ST : 0;
        M_T = m_T > 0 ? T / m_T - 1 : 0;
        b_1T = M_ST > 0 ? std::pow(static_cast<double>(M_ST), -1.0 / 3.0) : 0.0;
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError(m); };
        if (n_T % 2 != 0) fail("n_T must be even");
        if (n_T < 2 || n_T >= T) fail("n_T must satisfy 2 <= n_T < T");
        if (m_T < 4) fail("m_T must be at least 4");
        if (m_ST < 1 || m_ST * m_ST > m_T || (m_ST + 1) * (m_ST + 1) <= m_T)
            fail("m_ST must equal floor(sqrt(m_T))");
        if (M_ST != m_T / m_ST) fail("M_ST must equal floor(m_T / m_ST)");
        if (M_ST < 2) fail("M_ST must be at least 2");
        if (M_T != T / m_T - 1) fail("M_T must equal floor(T / m_T) - 1");
        if (M_T < 3) fail("M_T must be at least 3");
        if (!(b_WT > 0.0 && b_WT < 1.0)) fail("b_WT must lie in (0, 1)");
        if (b_1T != std::pow(static_cast<double>(M_ST), -1.0 / 3.0)) fail("b_1T must equal M_ST^(-1/3)");
        if (K < 1 || K > m_T) fail("K must satisfy 1 <= K <= m_T");
        if (!(m_T < v_T && v_T < T)) fail("v_T must satisfy m_T < v_T < T");
        if (!(theta > 0.0)) fail("theta must be positive");
        if (!(D_star > 2.0)) fail("D_star must exceed 2");
        if (!(epsilon_f >= 0.0)) fail("epsilon_f must be nonnegative");
        if (n_omega < 4) fail("n_omega must be at least 4");
        if (!(epsilon_grid > 0.0 && epsilon_grid < pi)) fail("epsilon_grid must lie in (0, pi)");
        if (!(gate_alpha > 0.0 && gate_alpha < 1.0)) fail("gate_alpha must lie in (0, 1)");
    }
};

inline SpectralConfig default_config(int T, std::optional<double> theta = std::nullopt) {
    if (T < 64) throw ConfigError("default_config requires T >= 64, got " + std::to_string(T));
    const double t = static_cast<double>(T);
    SpectralConfig c;
    c.T = T;
    c.m_T = static_cast<int>(std::floor(std::pow(t, 0.66)));
    c.n_T = static_cast<int>(std::floor(std::pow(t, 0.62)));
    c.n_T -= c.n_T % 2;
    c.b_WT = std::pow(static_cast<double>(c.n_T), -1.0 / 6.0);
    c.derive();
    c.v_T = std::max(static_cast<int>(std::floor(std::pow(t, 0.666))), c.m_T + 1);
    c.K = T <= 1000 ? 10 : c.m_T / 3;
    c.theta = theta.value_or(1.0);
    c.n_omega = c.n_T;
    c.epsilon_grid = pi / c.n_omega;
    c.validate();
    return c;
}

inline std::string to_string(SmootherKernel k) {
    switch (k) {
        case SmootherKernel::Parzen: return "parzen";
        case SmootherKernel::Bartlett: return "bartlett";
        case SmootherKernel::Uniform: return "uniform";
    }
    return "";
}

inline std::string to_string(GateRule g) {
    return g == GateRule::Minimax ? "minimax" : "extreme_value";
}

inline std::string to_key_values(const SpectralConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "T = " << c.T << '\n'
       << "m_T = " << c.m_T << '\n'
       << "n_T = " << c.n_T << '\n'
       << "b_WT = " << c.b_WT << '\n'
       << "m_ST = " << c.m_ST << '\n'
       << "M_ST = " << c.M_ST << '\n'
       << "M_T = " << c.M_T << '\n'
       << "taper = rectangular\n"
       << "smoother_kernel = " << to_string(c.smoother_kernel) << '\n'
       << "lrv_kernel = bartlett\n"
       << "b_1T = " << c.b_1T << '\n'
       << "n_omega = " << c.n_omega << '\n'
       << "epsilon_grid = " << c.epsilon_grid << '\n'
       << "K = " << c.K << '\n'
       << "v_T = " << c.v_T << '\n'
       << "theta = " << c.theta << '\n'
       << "D_star = " << c.D_star << '\n'
       << "epsilon_f = " << c.epsilon_f << '\n'
       << "gate = " << to_string(c.gate) << '\n'
       << "gate_alpha = " << c.gate_alpha << '\n';
    return os.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + key + ": '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return d;
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d != std::floor(d)) throw ConfigError("expected integer for " + key + ": '" + v + "'");
    return static_cast<int>(d);
}

}  // namespace detail

inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

// Applies overrides on top of `base`. Derived block quantities are recomputed
// from T and m_T; if the text also lists them they must agree.
inline SpectralConfig apply_key_values(SpectralConfig base, const std::map<std::string, std::string>& kv) {
    using detail::parse_double;
    using detail::parse_int;
    SpectralConfig& c = base;
    bool grid_eps_given = false;
    for (const auto& [k, v] : kv) {
        if (k == "T") c.T = parse_int(k, v);
        else if (k == "m_T") c.m_T = parse_int(k, v);
        else if (k == "n_T") c.n_T = parse_int(k, v);
        else if (k == "b_WT") c.b_WT = parse_double(k, v);
        else if (k == "n_omega") c.n_omega = parse_int(k, v);
        else if (k == "epsilon_grid") { c.epsilon_grid = parse_double(k, v); grid_eps_given = true; }
        else if (k == "K") c.K = parse_int(k, v);
        else if (k == "v_T") c.v_T = parse_int(k, v);
        else if (k == "theta") c.theta = parse_double(k, v);
        else if (k == "D_star") c.D_star = parse_double(k, v);
        else if (k == "epsilon_f") c.epsilon_f = parse_double(k, v);
        else if (k == "gate_alpha") c.gate_alpha = parse_double(k, v);
        else if (k == "taper") {
            if (v != "rectangular") throw ConfigError("unsupported taper: " + v);
        } else if (k == "lrv_kernel") {
            if (v != "bartlett") throw ConfigError("unsupported lrv_kernel: " + v);
        } else if (k == "smoother_kernel") {
            if (v == "parzen") c.smoother_kernel = SmootherKernel::Parzen;
            else if (v == "bartlett") c.smoother_kernel = SmootherKernel::Bartlett;
            else if (v == "uniform") c.smoother_kernel = SmootherKernel::Uniform;
            else throw ConfigError("unknown smoother_kernel: " + v);
        } else if (k == "gate") {
            if (v == "minimax") c.gate = GateRule::Minimax;
            else if (v == "extreme_value") c.gate = GateRule::ExtremeValue;
            else throw ConfigError("unknown gate: " + v);
        } else if (k != "m_ST" && k != "M_ST" && k != "M_T" && k != "b_1T") {
            throw ConfigError("unknown config key: " + k);
        }
    }
    if (kv.count("n_omega") && !grid_eps_given) c.epsilon_grid = pi / c.n_omega;
    c.derive();
    if ((kv.count("m_T") || kv.count("T")) && !kv.count("v_T"))
        c.v_T = std::max(static_cast<int>(std::floor(std::pow(static_cast<double>(c.T), 0.666))), c.m_T + 1);
    if (kv.count("m_ST") && parse_int("m_ST", kv.at("m_ST")) != c.m_ST) throw ConfigError("m_ST inconsistent with m_T");
    if (kv.count("M_ST") && parse_int("M_ST", kv.at("M_ST")) != c.M_ST) throw ConfigError("M_ST inconsistent with m_T");
    if (kv.count("M_T") && parse_int("M_T", kv.at("M_T")) != c.M_T) throw ConfigError("M_T inconsistent with T and m_T");
    c.validate();
    return c;
}

inline SpectralConfig read_config_file(const std::string& path, const SpectralConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return apply_key_values(base, parse_key_values(ss.str()));
}

struct FrequencyGrid {
    std::vector<double> pi_full;
    std::vector<std::size_t> prime_index;  // zero-based positions of pi_prime in pi_full
    std::vector<double> pi_prime;
    int stride = 1;
    int n_omega_prime = 0;
};

inline FrequencyGrid build_frequency_grid(int n_omega, double epsilon, int stride) {
    if (n_omega < 4) throw GridError("n_omega must be at least 4");
    if (!(epsilon > 0.0 && epsilon < pi)) throw GridError("epsilon must lie in (0, pi)");
    if (stride < 1 || stride >= n_omega) throw GridError("pi_prime stride must be below n_omega");
    FrequencyGrid g;
    g.stride = stride;
    const double step = (2.0 * pi - epsilon) / (n_omega - 1);
    g.pi_full.resize(static_cast<std::size_t>(n_omega));
    for (int k = 0; k < n_omega; ++k) g.pi_full[static_cast<std::size_t>(k)] = -pi + k * step;
    g.pi_full.back() = pi - epsilon;
    for (int k = 0; k < n_omega - 1; k += stride) g.prime_index.push_back(static_cast<std::size_t>(k));
    g.prime_index.push_back(static_cast<std::size_t>(n_omega - 1));
    for (auto i : g.prime_index) g.pi_prime.push_back(g.pi_full[i]);
    g.n_omega_prime = n_omega / stride;
    return g;
}

inline int prime_stride(const SpectralConfig& c) {
    return static_cast<int>(std::floor(c.n_T * c.b_WT)) + 1;
}

inline FrequencyGrid build_frequency_grid(const SpectralConfig& c) {
    return build_frequency_grid(c.n_omega, c.epsilon_grid, prime_stride(c));
}

}  // namespace evospec
