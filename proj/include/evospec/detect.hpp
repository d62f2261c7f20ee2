#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "blocks.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "stats.hpp"

namespace evospec {

struct ChangePointEstimate {
    int t_hat = 0;
    double lambda_hat = 0.0;
    double omega_hat = 0.0;
    double d_value = 0.0;
};

struct Refinement {
    int anchor = 0;
    std::vector<int> draws;
    int chosen = 0;
};

struct IterationTrace {
    int iteration = 0;
    std::size_t candidates = 0;
    double gate_value = 0.0;
    double threshold = 0.0;
    bool proceed = false;
    int t_hat = 0;
};

struct ChangePointSet {
    std::vector<ChangePointEstimate> estimates;
    int m_hat = 0;
    std::vector<Refinement> refinements;
    std::vector<IterationTrace> trace;
};

// Two precomputed LocalSpectrum matrices viewed as a spectral source.
struct SpectrumPair {
    const LocalSpectrum& left_spectrum;
    const LocalSpectrum& right_spectrum;

    std::size_t n_freq() const { return left_spectrum.frequencies.size(); }
    const double* left(int j) const { return row(left_spectrum, j); }
    const double* right(int j) const { return row(right_spectrum, j); }

private:
    static const double* row(const LocalSpectrum& s, int j) {
        if (!s.has(j)) throw IndexError("time index " + std::to_string(j) + " not in spectrum");
        return s.estimates.data() + static_cast<std::size_t>(j - s.time_indices.front()) * s.frequencies.size();
    }
};

// Split-level quantities at every source frequency.
struct SplitContrast {
    std::vector<double> D;       // M_ST^{-1/2} |sum_L f_L - sum_R f_R|
    std::vector<double> sigma;   // sqrt of the long-run variance over S_{L,r}
    std::vector<double> diff;    // |mean_L - mean_R|
};

template <class Source>
SplitContrast split_contrast(Source& src, int r, const SpectralConfig& c) {
    const SplitSets sets = lr_sets(r, c);
    const std::size_t nf = src.n_freq();
    SplitContrast out{std::vector<double>(nf), std::vector<double>(nf), std::vector<double>(nf)};
    std::vector<const double*> L, R;
    for (int j : sets.left.indices) L.push_back(src.left(j));
    for (int j : sets.right.indices) R.push_back(src.right(j));
    std::vector<double> seq(L.size());
    const double M = static_cast<double>(c.M_ST);
    for (std::size_t k = 0; k < nf; ++k) {
        double sl = 0.0, sr = 0.0;
        for (std::size_t i = 0; i < L.size(); ++i) {
            seq[i] = L[i][k];
            sl += L[i][k];
            sr += R[i][k];
        }
        out.D[k] = std::abs(sl - sr) / std::sqrt(M);
        out.diff[k] = std::abs(sl - sr) / M;
        out.sigma[k] = std::sqrt(long_run_variance_detail(seq, c.b_1T, c.lrv_kernel).value);
    }
    return out;
}

inline double d_stat(const TimeSeries& x, int r, double omega, const SpectralConfig& c) {
    detail::check_series(x, c);
    lr_sets(r, c);
    SpectralEngine eng(x.demeaned().values(), c, {omega});
    return split_contrast(eng, r, c).D[0];
}

struct MaxOverFrequency {
    double value = -1.0;
    std::size_t index = 0;
};

inline MaxOverFrequency max_over(const std::vector<double>& v) {
    MaxOverFrequency m;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (v[k] > m.value) m = {v[k], k};
    return m;
}

// Coarse split grid r = k m_T, k >= 2, with r < (M_T - 1) m_T - n_T.
inline std::vector<int> coarse_candidates(const SpectralConfig& c) {
    std::vector<int> out;
    for (int r = 2 * c.m_T; r < (c.M_T - 1) * c.m_T - c.n_T; r += c.m_T)
        if (valid_split(r, c)) out.push_back(r);
    return out;
}

struct SingleBreak {
    int t_hat = 0;
    double omega_hat = 0.0;
    double d_value = 0.0;
    std::vector<std::pair<int, double>> profile;  // (r, max_omega D_r)
};

template <class Source>
SingleBreak single_break_on(Source& src, const std::vector<double>& freqs, const SpectralConfig& c) {
    const std::vector<int> cand = coarse_candidates(c);
    if (cand.empty()) throw SizeError("no admissible split candidates");
    SingleBreak best;
    best.d_value = -1.0;
    for (int r : cand) {
        const MaxOverFrequency m = max_over(split_contrast(src, r, c).D);
        best.profile.emplace_back(r, m.value);
        if (m.value > best.d_value) {
            best.t_hat = r;
            best.omega_hat = freqs[m.index];
            best.d_value = m.value;
        }
    }
    return best;
}

inline SingleBreak single_break(const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g) {
    detail::check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, g.pi_full);
    return single_break_on(eng, g.pi_full, c);
}

struct MinimaxLength {
    double m_star = 0.0;
    int M_star = 0;
};

// Fixed point of m* = (sqrt(log(T/m*)) T^theta / D)^{2/(2 theta + 1)}, iterated
// with the continuous ratio T/m*; M* = floor(T/m*) at the end.
inline MinimaxLength minimax_block_length(int T, double theta, double D = 1.0, double start = 0.0) {
    if (!(theta > 0.0)) throw ConfigError("theta must be positive");
    const double t = static_cast<double>(T);
    double m = start > 0.0 ? start : std::pow(t, 0.66);
    for (int it = 0; it < 100; ++it) {
        const double ratio = t / m;
        if (!(ratio > 1.0)) throw NumericsError("m* reached T");
        const double next = std::pow(std::sqrt(std::log(ratio)) * std::pow(t, theta) / D, 2.0 / (2.0 * theta + 1.0));
        if (!std::isfinite(next)) throw NumericsError("m* iteration diverged");
        if (std::abs(next - m) <= 1e-12 * m) {
            const int M = static_cast<int>(std::floor(t / next));
            if (M < 2) throw NumericsError("M* below 2");
            return {next, M};
        }
        m = next;
    }
    throw NumericsError("m* iteration did not converge in 100 steps");
}

inline double psi_threshold(const SpectralConfig& c) {
    if (!(c.D_star > 2.0)) throw ConfigError("D_star must exceed 2");
    const MinimaxLength ml = minimax_block_length(c.T, c.theta, 1.0, c.m_T);
    return 2.0 * c.D_star * std::sqrt(std::log(static_cast<double>(ml.M_star)) / ml.m_star);
}

struct ThetaEstimate {
    double theta = 1.0;
    double s_star = 0.0;
    bool at_boundary = false;
};

// Solves s = 2 sqrt(log(M*)/m*) for theta on (0.05, 3] by bisection.
inline ThetaEstimate solve_theta(double s_star, int T) {
    auto g = [T](double th) {
        const MinimaxLength ml = minimax_block_length(T, th);
        return 2.0 * std::sqrt(std::log(static_cast<double>(ml.M_star)) / ml.m_star);
    };
    double lo = 0.05, hi = 3.0;
    if (s_star >= g(lo)) return {lo, s_star, true};
    if (s_star <= g(hi)) return {hi, s_star, true};
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > s_star) lo = mid;
        else hi = mid;
    }
    return {0.5 * (lo + hi), s_star, false};
}

inline ThetaEstimate estimate_theta(const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g) {
    detail::check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, g.pi_prime);
    const BlockAverages b = block_averages(eng, c);
    std::vector<double> per_block;
    for (int r = 1; r <= c.M_T - 2; ++r) {
        const auto i = static_cast<std::size_t>(r - 1);
        double v = 0.0;
        for (std::size_t k = 0; k < b.n_freq; ++k) {
            const double den = b.sigma_L[i][k] + c.epsilon_f;
            if (!(den > 0.0)) throw DegenerateVarianceError("sigma_L + epsilon_f is zero at block " + std::to_string(r));
            v = std::max(v, std::abs(b.f_tilde_left[i][k] - b.f_tilde_right[i + 1][k]) / den);
        }
        per_block.push_back(v);
    }
    std::sort(per_block.begin(), per_block.end());
    const auto keep = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(per_block.size())));
    return solve_theta(per_block[std::max<std::size_t>(keep, 1) - 1], c.T);
}

// Uniform draw of k distinct elements of pool, in draw order.
inline std::vector<int> draw_without_replacement(std::vector<int> pool, int k, std::mt19937_64& rng) {
    const auto n = pool.size();
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), n);
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(take);
    return pool;
}

struct Algorithm1Options {
    int threads = 1;
};

// Wild sequential top-down search. Coarse anchors r = k m_T are refined once
// by K seeded draws from {r - m_T + 1, ..., r} (stream keyed by (seed, r)),
// keeping the split with the largest max_omega D, the anchor included. The
// loop then tests the surviving splits, records the argmax and removes its
// v_T-neighbourhood until the test stops.
inline ChangePointSet algorithm1(const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g,
                                 std::uint64_t seed, Algorithm1Options opt = {}) {
    detail::check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, g.pi_full);
    eng.fill_all();

    std::vector<int> anchors;
    for (int r = 2 * c.m_T; r <= (c.M_T - 1) * c.m_T - c.n_T; r += c.m_T)
        if (valid_split(r, c)) anchors.push_back(r);
    if (anchors.empty()) throw SizeError("no admissible split candidates");

    struct Point {
        int t = 0;
        double max_d = 0.0;
        std::size_t arg_omega = 0;
        double gate = 0.0;
    };
    const double threshold =
        c.gate == GateRule::Minimax ? psi_threshold(c) : critical_value(c.gate_alpha);
    const double logM = std::log(static_cast<double>(c.M_T));
    const double gam = gamma_mt(c.M_T);
    auto evaluate = [&](int t) {
        const SplitContrast sc = split_contrast(eng, t, c);
        const MaxOverFrequency m = max_over(sc.D);
        Point p{t, m.value, m.index, -std::numeric_limits<double>::infinity()};
        for (std::size_t k : g.prime_index) {
            const double den = sc.sigma[k] + c.epsilon_f;
            if (!(den > 0.0)) throw DegenerateVarianceError("sigma_L + epsilon_f is zero at split " + std::to_string(t));
            double v;
            if (c.gate == GateRule::Minimax) {
                v = c.M_ST * sc.diff[k] / den;
            } else {
                v = std::sqrt(logM) * (std::sqrt(static_cast<double>(c.M_ST)) * sc.diff[k] / den - gam);
            }
            p.gate = std::max(p.gate, v);
        }
        if (c.gate == GateRule::ExtremeValue) p.gate -= std::log(static_cast<double>(g.n_omega_prime));
        return p;
    };

    std::vector<Point> points(anchors.size());
    std::vector<Refinement> refinements(anchors.size());
    parallel_for(anchors.size(), opt.threads, [&](std::size_t i) {
        const int r = anchors[i];
        Refinement& ref = refinements[i];
        ref.anchor = r;
        Point best = evaluate(r);
        if (r != 2 * c.m_T) {
            std::vector<int> pool;
            for (int t = r - c.m_T + 1; t <= r; ++t)
                if (valid_split(t, c)) pool.push_back(t);
            auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
            ref.draws = draw_without_replacement(pool, c.K, rng);
            std::vector<int> order = ref.draws;
            std::sort(order.begin(), order.end());
            for (int t : order) {
                if (t == r) continue;
                const Point p = evaluate(t);
                if (p.max_d > best.max_d || (p.max_d == best.max_d && p.t < best.t)) best = p;
            }
        }
        ref.chosen = best.t;
        points[i] = best;
    });

    ChangePointSet out;
    out.refinements = refinements;
    std::vector<Point> alive = points;
    std::sort(alive.begin(), alive.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
    const int guard = (c.T + c.v_T - 1) / c.v_T;
    for (int it = 1; !alive.empty(); ++it) {
        if (it > guard) throw AlgorithmError("iteration guard reached");
        IterationTrace tr;
        tr.iteration = it;
        tr.candidates = alive.size();
        tr.threshold = threshold;
        tr.gate_value = -std::numeric_limits<double>::infinity();
        for (const Point& p : alive) tr.gate_value = std::max(tr.gate_value, p.gate);
        tr.proceed = tr.gate_value >= threshold;
        if (!tr.proceed) {
            out.trace.push_back(tr);
            break;
        }
        const Point* top = &alive.front();
        for (const Point& p : alive)
            if (p.max_d > top->max_d) top = &p;
        const Point est = *top;
        tr.t_hat = est.t;
        out.trace.push_back(tr);
        out.estimates.push_back({est.t, static_cast<double>(est.t) / c.T, g.pi_full[est.arg_omega], est.max_d});
        std::erase_if(alive, [&](const Point& p) { return std::abs(p.t - est.t) <= c.v_T; });
    }
    std::sort(out.estimates.begin(), out.estimates.end(),
              [](const ChangePointEstimate& a, const ChangePointEstimate& b) { return a.t_hat < b.t_hat; });
    out.m_hat = static_cast<int>(out.estimates.size());
    return out;
}

// max_omega D_r over every admissible split, for diagnostics.
inline std::vector<std::pair<int, double>> d_profile(const TimeSeries& x, const SpectralConfig& c, const FrequencyGrid& g) {
    detail::check_series(x, c);
    SpectralEngine eng(x.demeaned().values(), c, g.pi_full);
    eng.fill_all();
    std::vector<std::pair<int, double>> out;
    for (int r = 1; r <= c.T; ++r)
        if (valid_split(r, c)) out.emplace_back(r, max_over(split_contrast(eng, r, c).D).value);
    return out;
}

}  // namespace evospec
