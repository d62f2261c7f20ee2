#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "spectral.hpp"

namespace evospec {

enum class BlockKind { Sr, SLr, SRr };

struct BlockIndexSet {
    BlockKind kind = BlockKind::Sr;
    int anchor = 0;
    std::vector<int> indices;
};

namespace detail {

inline std::vector<int> strided(int start, const SpectralConfig& c) {
    std::vector<int> v(static_cast<std::size_t>(c.M_ST));
    for (int k = 0; k < c.M_ST; ++k) v[static_cast<std::size_t>(k)] = start + k * c.m_ST;
    return v;
}

}  // namespace detail

// M_ST points, stride m_ST, from r m_T - floor(m_T/2) + floor(n_T/2) + 1.
inline BlockIndexSet block_set(int r, const SpectralConfig& c) {
    if (r < 1 || r > c.M_T) throw IndexError("block number " + std::to_string(r) + " outside 1..M_T");
    BlockIndexSet b{BlockKind::Sr, r, detail::strided(r * c.m_T - c.m_T / 2 + c.n_T / 2 + 1, c)};
    if (b.indices.front() < c.n_T || b.indices.back() > c.T - c.n_T)
        throw IndexError("block " + std::to_string(r) + " indices leave [n_T, T - n_T]");
    return b;
}

inline bool valid_split(int r, const SpectralConfig& c) {
    return r - c.m_T + 1 >= c.n_T && r + 1 + (c.M_ST - 1) * c.m_ST + c.n_T <= c.T;
}

struct SplitSets {
    BlockIndexSet left;
    BlockIndexSet right;
};

inline SplitSets lr_sets(int r, const SpectralConfig& c) {
    if (!valid_split(r, c)) throw IndexError("split " + std::to_string(r) + " leaves the admissible range");
    return {{BlockKind::SLr, r, detail::strided(r - c.m_T + 1, c)},
            {BlockKind::SRr, r, detail::strided(r + 1, c)}};
}

inline double block_average(const LocalSpectrum& s, const BlockIndexSet& set, double omega) {
    const std::size_t k = s.column(omega);
    double sum = 0.0;
    for (int j : set.indices) sum += s.at(j, k);
    return sum / static_cast<double>(set.indices.size());
}

struct LrvValue {
    double value = 0.0;
    bool floored = false;
};

// Kernel-weighted autocovariances of the demeaned sequence, divisor M at every lag.
inline LrvValue long_run_variance_detail(std::span<const double> v, double bandwidth,
                                         LrvKernel kernel = LrvKernel::Bartlett) {
    const std::size_t M = v.size();
    if (M < 2) throw SizeError("long-run variance needs at least 2 values");
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(M);
    auto gamma = [&](std::size_t lag) {
        double g = 0.0;
        for (std::size_t t = lag; t < M; ++t) g += (v[t] - mean) * (v[t - lag] - mean);
        return g / static_cast<double>(M);
    };
    double s = gamma(0);
    for (std::size_t lag = 1; lag < M; ++lag) {
        const double w = lrv_weight(kernel, bandwidth * static_cast<double>(lag));
        if (w == 0.0) break;
        s += 2.0 * w * gamma(lag);
    }
    if (s < 0.0) return {0.0, true};
    return {s, false};
}

inline double long_run_variance(std::span<const double> v, double bandwidth) {
    return long_run_variance_detail(v, bandwidth).value;
}

inline double lrv_estimate(const LocalSpectrum& s, const BlockIndexSet& set, double omega, const SpectralConfig& c) {
    if (static_cast<int>(set.indices.size()) < 2) throw SizeError("block set needs at least 2 points");
    const std::size_t k = s.column(omega);
    std::vector<double> v;
    v.reserve(set.indices.size());
    for (int j : set.indices) v.push_back(s.at(j, k));
    return long_run_variance(v, c.b_1T);
}

// Per-block quantities for r = 1..M_T-1 on every engine frequency:
// left averages and sigma over S_r, right averages over S_r.
struct BlockAverages {
    std::size_t n_freq = 0;
    std::vector<std::vector<double>> f_tilde_left;   // [r-1][k]
    std::vector<std::vector<double>> f_tilde_right;  // [r-1][k]
    std::vector<std::vector<double>> sigma_L;        // [r-1][k]
    int floored = 0;
};

inline BlockAverages block_averages(SpectralEngine& eng, const SpectralConfig& c) {
    BlockAverages out;
    out.n_freq = eng.n_freq();
    const std::size_t nf = out.n_freq;
    std::vector<double> seq(static_cast<std::size_t>(c.M_ST));
    for (int r = 1; r <= c.M_T - 1; ++r) {
        const BlockIndexSet set = block_set(r, c);
        std::vector<double> fl(nf, 0.0), fr(nf, 0.0), sg(nf, 0.0);
        std::vector<const double*> lrows, rrows;
        for (int j : set.indices) {
            lrows.push_back(eng.left(j));
            rrows.push_back(eng.right(j));
        }
        for (std::size_t k = 0; k < nf; ++k) {
            double sl = 0.0, sr = 0.0;
            for (std::size_t i = 0; i < lrows.size(); ++i) {
                seq[i] = lrows[i][k];
                sl += lrows[i][k];
                sr += rrows[i][k];
            }
            fl[k] = sl / c.M_ST;
            fr[k] = sr / c.M_ST;
            const LrvValue v = long_run_variance_detail(seq, c.b_1T, c.lrv_kernel);
            out.floored += v.floored ? 1 : 0;
            sg[k] = std::sqrt(v.value);
        }
        out.f_tilde_left.push_back(std::move(fl));
        out.f_tilde_right.push_back(std::move(fr));
        out.sigma_L.push_back(std::move(sg));
    }
    return out;
}

}  // namespace evospec
