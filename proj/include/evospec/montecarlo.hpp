#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "detect.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "stats.hpp"

namespace evospec {

inline std::string format_omega(double w) {
    std::ostringstream os;
    os.precision(6);
    os << w;
    return os.str();
}

// Normalized statistics per replication; replication i simulates with stream i.
struct NullDraws {
    std::vector<double> omegas;
    std::vector<std::vector<double>> s_max;  // [omega][rep]
    std::vector<std::vector<double>> r_max;
    std::vector<double> s_dmax;
    std::vector<double> r_dmax;
};

inline NullDraws simulate_statistics(const DgpSpec& spec, const SpectralConfig& c, const FrequencyGrid& g,
                                     const std::vector<double>& omegas, int reps, std::uint64_t seed, int threads) {
    NullDraws out;
    out.omegas = omegas;
    const auto n = static_cast<std::size_t>(reps);
    out.s_max.assign(omegas.size(), std::vector<double>(n));
    out.r_max.assign(omegas.size(), std::vector<double>(n));
    out.s_dmax.resize(n);
    out.r_dmax.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const TimeSeries x = simulate(spec, seed, i);
        const AllReports rep = all_statistics(x, omegas, c, g);
        for (std::size_t k = 0; k < omegas.size(); ++k) {
            out.s_max[k][i] = rep.s_max[k].normalized;
            out.r_max[k][i] = rep.r_max[k].normalized;
        }
        out.s_dmax[i] = rep.s_dmax.normalized;
        out.r_dmax[i] = rep.r_dmax.normalized;
    });
    return out;
}

inline double reject_rate(const std::vector<double>& normalized, double alpha) {
    const double v = critical_value(alpha);
    std::size_t hits = 0;
    for (double z : normalized) hits += z >= v ? 1 : 0;
    return normalized.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(normalized.size());
}

struct RateRow {
    std::string model;
    int T = 0;
    std::string statistic;
    double alpha = 0.05;
    double reject_rate = 0.0;
    int replications = 0;
    std::uint64_t seed = 0;
};

inline std::vector<RateRow> rate_rows(const DgpSpec& spec, const NullDraws& d, double alpha, std::uint64_t seed) {
    std::vector<RateRow> rows;
    const int reps = static_cast<int>(d.s_dmax.size());
    auto add = [&](const std::string& name, const std::vector<double>& v) {
        rows.push_back({to_string(spec.model), spec.T, name, alpha, reject_rate(v, alpha), reps, seed});
    };
    for (std::size_t k = 0; k < d.omegas.size(); ++k) add("smax(" + format_omega(d.omegas[k]) + ")", d.s_max[k]);
    for (std::size_t k = 0; k < d.omegas.size(); ++k) add("rmax(" + format_omega(d.omegas[k]) + ")", d.r_max[k]);
    add("sdmax", d.s_dmax);
    add("rdmax", d.r_dmax);
    return rows;
}

// Linear-interpolation quantile of a sample (type 7).
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct BreakSummary {
    std::vector<int> m_hat;                   // per replication
    std::vector<std::vector<int>> estimates;  // per replication
    int m0 = 0;
    double fraction_correct = 0.0;
    // Quantiles (0.25, 0.5, 0.75) of each break date over replications with m_hat == m0.
    std::vector<std::vector<double>> date_quantiles;
};

inline BreakSummary simulate_breaks(const DgpSpec& spec, const SpectralConfig& c, const FrequencyGrid& g, int reps,
                                    std::uint64_t seed, int threads) {
    BreakSummary out;
    const auto n = static_cast<std::size_t>(reps);
    out.m_hat.resize(n);
    out.estimates.resize(n);
    out.m0 = spec.has_breaks() ? 2 : 0;
    parallel_for(n, threads, [&](std::size_t i) {
        const TimeSeries x = simulate(spec, seed, i);
        const ChangePointSet s = algorithm1(x, c, g, derive_seed(seed ^ 0x5bd1e995ULL, i));
        out.m_hat[i] = s.m_hat;
        for (const auto& e : s.estimates) out.estimates[i].push_back(e.t_hat);
    });
    std::size_t correct = 0;
    std::vector<std::vector<double>> dates(static_cast<std::size_t>(out.m0));
    for (std::size_t i = 0; i < n; ++i) {
        if (out.m_hat[i] != out.m0) continue;
        ++correct;
        for (int l = 0; l < out.m0; ++l) dates[static_cast<std::size_t>(l)].push_back(out.estimates[i][static_cast<std::size_t>(l)]);
    }
    out.fraction_correct = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    for (auto& d : dates) out.date_quantiles.push_back({quantile(d, 0.25), quantile(d, 0.5), quantile(d, 0.75)});
    return out;
}

}  // namespace evospec
