#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "blocks.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "spectral.hpp"

namespace evospec {

enum class Statistic { Smax, SDmax, Rmax, RDmax };

inline std::string to_string(Statistic s) {
    switch (s) {
        case Statistic::Smax: return "smax";
        case Statistic::SDmax: return "sdmax";
        case Statistic::Rmax: return "rmax";
        case Statistic::RDmax: return "rdmax";
    }
    return "";
}

struct FrequencyDetail {
    double omega = 0.0;
    double raw_max = 0.0;
    double normalized = 0.0;
    int argmax_r = 0;
};

struct TestReport {
    Statistic statistic = Statistic::Smax;
    double omega = 0.0;
    double raw_max = 0.0;
    double normalized = 0.0;
    double gamma_MT = 0.0;
    double critical_value = 0.0;
    double alpha = 0.05;
    double p_value = 1.0;
    bool reject = false;
    int argmax_r = 0;
    double argmax_omega = 0.0;
    int lrv_floored = 0;
    std::vector<FrequencyDetail> per_frequency;
};

// Quantile of P(V <= v) = exp(-pi^{-1/2} e^{-v}) at 1 - alpha.
inline double critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    return -std::log(std::sqrt(pi) * -std::log1p(-alpha));
}

inline double extreme_value_cdf(double v) { return std::exp(-std::exp(-v) / std::sqrt(pi)); }

inline double p_value(double normalized) { return -std::expm1(-std::exp(-normalized) / std::sqrt(pi)); }

inline double gamma_mt(int M_T) {
    if (M_T < 3) throw ConfigError("gamma_MT needs M_T >= 3");
    const double l = std::log(static_cast<double>(M_T));
    return std::sqrt(4.0 * l - 2.0 * std::log(l));
}

inline double normalize_max(double raw, const SpectralConfig& c) {
    return std::sqrt(std::log(static_cast<double>(c.M_T))) * (std::sqrt(static_cast<double>(c.M_ST)) * raw - gamma_mt(c.M_T));
}

namespace detail {

struct Contrast {
    double value = 0.0;
    int r = 0;
};

// Max over r = 1..M_T-2 at column k. Ties go to the smallest r.
inline Contrast s_contrast(const BlockAverages& b, std::size_t k, const SpectralConfig& c) {
    Contrast best{-1.0, 0};
    for (int r = 1; r <= c.M_T - 2; ++r) {
        const auto i = static_cast<std::size_t>(r - 1);
        const double den = b.sigma_L[i][k] + c.epsilon_f;
        if (!(den > 0.0))
            throw DegenerateVarianceError("sigma_L + epsilon_f is zero at block " + std::to_string(r));
        const double v = std::abs(b.f_tilde_left[i][k] - b.f_tilde_right[i + 1][k]) / den;
        if (v > best.value) best = {v, r};
    }
    return best;
}

inline Contrast r_contrast(const BlockAverages& b, std::size_t k, const SpectralConfig& c) {
    Contrast best{-1.0, 0};
    for (int r = 1; r <= c.M_T - 2; ++r) {
        const auto i = static_cast<std::size_t>(r - 1);
        const double den = b.f_tilde_right[i + 1][k] + c.epsilon_f;
        if (den == 0.0)
            throw DegenerateDenominatorError("right block average + epsilon_f is zero at block " + std::to_string(r + 1));
        const double v = std::abs((b.f_tilde_left[i][k] + c.epsilon_f) / den - 1.0);
        if (v > best.value) best = {v, r};
    }
    return best;
}

inline void finish(TestReport& rep, const SpectralConfig& c, double alpha) {
    rep.gamma_MT = gamma_mt(c.M_T);
    rep.alpha = alpha;
    rep.critical_value = critical_value(alpha);
    rep.reject = rep.normalized >= rep.critical_value;
    rep.p_value = p_value(rep.normalized);
}

inline TestReport single_report(Statistic st, const BlockAverages& b, std::size_t k, double omega,
                                const SpectralConfig& c, double alpha) {
    const Contrast ct = st == Statistic::Smax ? s_contrast(b, k, c) : r_contrast(b, k, c);
    TestReport rep;
    rep.statistic = st;
    rep.omega = omega;
    rep.argmax_omega = omega;
    rep.raw_max = ct.value;
    rep.argmax_r = ct.r;
    rep.normalized = normalize_max(ct.value, c);
    rep.lrv_floored = b.floored;
    rep.per_frequency.push_back({omega, ct.value, rep.normalized, ct.r});
    finish(rep, c, alpha);
    return rep;
}

// Max over the given columns of the normalized per-frequency statistic, minus
// log(n'_omega). Ties go to the smallest r, then the smallest frequency index.
inline TestReport double_report(Statistic st, const BlockAverages& b, const std::vector<std::size_t>& cols,
                                const std::vector<double>& omegas, int n_omega_prime, const SpectralConfig& c,
                                double alpha) {
    TestReport rep;
    rep.statistic = st;
    rep.lrv_floored = b.floored;
    const Statistic inner = st == Statistic::SDmax ? Statistic::Smax : Statistic::Rmax;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const Contrast ct = inner == Statistic::Smax ? s_contrast(b, cols[i], c) : r_contrast(b, cols[i], c);
        const double z = normalize_max(ct.value, c);
        rep.per_frequency.push_back({omegas[i], ct.value, z, ct.r});
        if (z > best || (z == best && ct.r < rep.argmax_r)) {
            best = z;
            rep.raw_max = ct.value;
            rep.argmax_r = ct.r;
            rep.argmax_omega = omegas[i];
        }
    }
    rep.omega = rep.argmax_omega;
    rep.normalized = best - std::log(static_cast<double>(n_omega_prime));
    finish(rep, c, alpha);
    return rep;
}

inline void check_series(const TimeSeries& x, const SpectralConfig& c) {
    if (x.size() != c.T) throw SizeError("series length " + std::to_string(x.size()) + " differs from config T=" + std::to_string(c.T));
}

}  // namespace detail

inline TestReport s_max(const TimeSeries& x, double omega, const SpectralConfig& c, double alpha = 0.05) {
    detail::check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, {omega});
    return detail::single_report(Statistic::Smax, block_averages(eng, c), 0, omega, c, alpha);
}

inline TestReport r_max(const TimeSeries& x, double omega, const SpectralConfig& c, double alpha = 0.05) {
    detail::check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, {omega});
    return detail::single_report(Statistic::Rmax, block_averages(eng, c), 0, omega, c, alpha);
}

namespace detail {

inline TestReport dmax(Statistic st, const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g, double alpha) {
    check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, g.pi_prime);
    std::vector<std::size_t> cols(g.pi_prime.size());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
    return double_report(st, block_averages(eng, c), cols, g.pi_prime, g.n_omega_prime, c, alpha);
}

}  // namespace detail

inline TestReport s_dmax(const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g, double alpha = 0.05) {
    return detail::dmax(Statistic::SDmax, x, c, g, alpha);
}

inline TestReport r_dmax(const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g, double alpha = 0.05) {
    return detail::dmax(Statistic::RDmax, x, c, g, alpha);
}

struct AllReports {
    std::vector<TestReport> s_max;  // one per requested omega
    std::vector<TestReport> r_max;
    TestReport s_dmax;
    TestReport r_dmax;
};

// All four statistics from one spectral pass: the single-frequency tests at
// each omega in `omegas` and the double-sup tests over pi_prime.
inline AllReports all_statistics(const TimeSeries& x, const std::vector<double>& omegas, const SpectralConfig& c,
                                 const FrequencyGrid& g, double alpha = 0.05) {
    detail::check_series(x, c);
    std::vector<double> freqs = omegas;
    freqs.insert(freqs.end(), g.pi_prime.begin(), g.pi_prime.end());
    SpectralEngine eng(x.demeaned().values(), c, freqs);
    const BlockAverages b = block_averages(eng, c);
    AllReports out;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        out.s_max.push_back(detail::single_report(Statistic::Smax, b, i, omegas[i], c, alpha));
        out.r_max.push_back(detail::single_report(Statistic::Rmax, b, i, omegas[i], c, alpha));
    }
    std::vector<std::size_t> cols(g.pi_prime.size());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = omegas.size() + i;
    out.s_dmax = detail::double_report(Statistic::SDmax, b, cols, g.pi_prime, g.n_omega_prime, c, alpha);
    out.r_dmax = detail::double_report(Statistic::RDmax, b, cols, g.pi_prime, g.n_omega_prime, c, alpha);
    return out;
}

}  // namespace evospec
