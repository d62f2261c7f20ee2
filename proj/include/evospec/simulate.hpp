#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace evospec {

enum class Model { M1, M2, M3, M4, M5, M6, M7 };

inline std::string to_string(Model m) {
    static const char* names[] = {"M1", "M2", "M3", "M4", "M5", "M6", "M7"};
    return names[static_cast<int>(m)];
}

inline Model parse_model(const std::string& s) {
    for (int i = 0; i < 7; ++i)
        if (s == to_string(static_cast<Model>(i)) || (s.size() == 2 && s[0] == 'm' && s[1] == '1' + i))
            return static_cast<Model>(i);
    throw ConfigError("unknown model: " + s);
}

struct DgpSpec {
    Model model = Model::M1;
    int T = 1000;
    double rho = 0.3;  // M1 only
    double l1 = 0.33;
    double l2 = 0.66;
    int burn_in = 500;

    bool has_breaks() const {
        return model == Model::M3 || model == Model::M4 || model == Model::M6 || model == Model::M7;
    }

    void validate() const {
        if (T < 2) throw ConfigError("T must be at least 2");
        if (!(std::abs(rho) < 1.0)) throw ConfigError("|rho| must be below 1");
        if (!(0.0 < l1 && l1 < l2 && l2 < 1.0)) throw ConfigError("need 0 < l1 < l2 < 1");
        if (burn_in < 100) throw ConfigError("burn_in must be at least 100");
        if (has_breaks()) {
            const int b1 = static_cast<int>(std::floor(T * l1));
            const int b2 = static_cast<int>(std::floor(T * l2));
            if (b1 <= 1 || b2 <= b1 || b2 >= T) throw ConfigError("break dates collapse for this T");
        }
    }
};

inline double m2_rho(double u) { return 0.4 * std::cos(0.8 - std::cos(2.0 * u)); }

inline double m5_variance(double u) { return std::max(1.5, 1.0 + std::cos(1.0 + std::cos(10.0 * u))); }

struct Regime {
    double rho;
    double sigma;
};

// Parameters of regime `seg` (0, 1, 2) at rescaled time u.
inline Regime regime_params(const DgpSpec& s, int seg, double u) {
    switch (s.model) {
        case Model::M1: return {s.rho, 1.0};
        case Model::M2: return {m2_rho(u), 1.0};
        case Model::M3: {
            const Regime r[] = {{0.3, 1.0}, {0.6, 0.7}, {0.6, 1.0}};
            return r[seg];
        }
        case Model::M4:
        case Model::M7:
            return seg == 1 ? Regime{0.8, 1.0} : Regime{m2_rho(u), 0.7};
        case Model::M5: return {0.0, std::sqrt(m5_variance(u))};
        case Model::M6: {
            const Regime r[] = {{0.0, 0.7}, {0.6, 0.7}, {0.6, 1.0}};
            return r[seg];
        }
    }
    return {0.0, 1.0};
}

// Regimes are closed on the right, so a break at l belongs to the earlier regime.
inline Regime regime_at(const DgpSpec& s, double u) {
    return regime_params(s, u <= s.l1 ? 0 : (u <= s.l2 ? 1 : 2), u);
}

inline TimeSeries simulate(const DgpSpec& s, std::uint64_t seed, std::uint64_t stream = 0) {
    s.validate();
    auto rng = make_rng(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double T = static_cast<double>(s.T);
    const int b1 = static_cast<int>(std::floor(s.T * s.l1));
    const int b2 = static_cast<int>(std::floor(s.T * s.l2));
    auto params = [&](int t) { return regime_params(s, t <= b1 ? 0 : (t <= b2 ? 1 : 2), t / T); };
    const Regime start = params(1);
    double prev = 0.0;
    for (int i = 0; i < s.burn_in; ++i) prev = start.rho * prev + start.sigma * normal(rng);
    std::vector<double> v(static_cast<std::size_t>(s.T));
    for (int t = 1; t <= s.T; ++t) {
        const Regime r = params(t);
        prev = r.rho * prev + r.sigma * normal(rng);
        v[static_cast<std::size_t>(t - 1)] = prev;
    }
    std::vector<BreakTruth> truth;
    if (s.has_breaks()) truth = {{b1, 0.0}, {b2, 0.0}};
    return TimeSeries(std::move(v), std::move(truth));
}

inline double theoretical_spectrum(const DgpSpec& s, double u, double omega) {
    const Regime r = regime_at(s, u);
    return r.sigma * r.sigma / (2.0 * pi * (1.0 - 2.0 * r.rho * std::cos(omega) + r.rho * r.rho));
}

}  // namespace evospec
