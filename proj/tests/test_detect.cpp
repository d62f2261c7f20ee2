#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evospec/detect.hpp"
#include "evospec/simulate.hpp"
#include "testing.hpp"

using namespace evospec;
using testing_util::white_noise;

namespace {

// Noise-free spectra of a unit variance step at r0: each window reports the
// share of its observations past the step.
std::pair<LocalSpectrum, LocalSpectrum> surrogate_step(const SpectralConfig& c, const std::vector<double>& freqs, int r0) {
    LocalSpectrum L, R;
    L.side = Side::Left;
    R.side = Side::Right;
    L.frequencies = R.frequencies = freqs;
    auto level = [&](int first) {
        const int past = std::clamp(first + c.n_T - 1 - r0, 0, c.n_T);
        return 1.0 + static_cast<double>(past) / c.n_T;
    };
    for (int j = c.n_T; j <= c.T; ++j) {
        L.time_indices.push_back(j);
        for (std::size_t k = 0; k < freqs.size(); ++k) L.estimates.push_back(level(j - c.n_T + 1));
    }
    for (int j = 1; j + c.n_T <= c.T; ++j) {
        R.time_indices.push_back(j);
        for (std::size_t k = 0; k < freqs.size(); ++k) R.estimates.push_back(level(j + 1));
    }
    return {L, R};
}

}  // namespace

TEST(DStat, ZeroSeries) {
    const SpectralConfig c = default_config(1000);
    EXPECT_EQ(d_stat(TimeSeries(std::vector<double>(1000, 0.0)), 400, 0.5, c), 0.0);
}

TEST(DStat, IdenticalPlantedSpectra) {
    const SpectralConfig c = default_config(1000);
    const FrequencyGrid g = build_frequency_grid(c);
    auto [L, R] = surrogate_step(c, g.pi_full, 5000);  // no step inside the sample
    SpectrumPair src{L, R};
    for (int r : {300, 450, 600}) {
        const SplitContrast sc = split_contrast(src, r, c);
        for (double d : sc.D) EXPECT_EQ(d, 0.0);
    }
}

TEST(DStat, MatchesDefinition) {
    const SpectralConfig c = default_config(1000);
    const TimeSeries x = simulate({Model::M3, 1000}, 12);
    const TimeSeries xd = x.demeaned();
    const SplitSets s = lr_sets(400, c);
    double sl = 0.0, sr = 0.0;
    for (int j : s.left.indices) sl += smooth_local_periodogram(xd, j, Side::Left, 0.8, c);
    for (int j : s.right.indices) sr += smooth_local_periodogram(xd, j, Side::Right, 0.8, c);
    const double ref = std::abs(sl - sr) / std::sqrt(static_cast<double>(c.M_ST));
    EXPECT_NEAR(d_stat(x, 400, 0.8, c), ref, 1e-10 * ref);
    EXPECT_THROW(d_stat(x, c.m_T - 1, 0.8, c), IndexError);
}

TEST(SingleBreak, PlantedStepAtCandidate) {
    const SpectralConfig c = default_config(1000);
    const FrequencyGrid g = build_frequency_grid(c);
    auto [L, R] = surrogate_step(c, g.pi_full, 4 * c.m_T);
    SpectrumPair src{L, R};
    const SingleBreak b = single_break_on(src, g.pi_full, c);
    EXPECT_EQ(b.t_hat, 4 * c.m_T);
    EXPECT_NEAR(b.d_value, std::sqrt(static_cast<double>(c.M_ST)), 1e-12);
}

TEST(SingleBreak, FlatProfileTakesSmallestCandidate) {
    const SpectralConfig c = default_config(1000);
    const FrequencyGrid g = build_frequency_grid(c);
    const SingleBreak b = single_break(TimeSeries(std::vector<double>(1000, 2.0)), c, g);
    EXPECT_EQ(b.t_hat, 2 * c.m_T);
    for (const auto& p : b.profile) EXPECT_EQ(p.second, 0.0);
}

TEST(SingleBreak, CandidateGrid) {
    const SpectralConfig c = default_config(1000);
    EXPECT_EQ(coarse_candidates(c), (std::vector<int>{190, 285, 380, 475, 570, 665}));
}

TEST(PsiThreshold, ThousandSamples) {
    const SpectralConfig c = default_config(1000);
    const MinimaxLength ml = minimax_block_length(1000, 1.0);
    EXPECT_NEAR(ml.m_star, 127.26945403787325, 1e-8);
    EXPECT_EQ(ml.M_star, 7);
    EXPECT_NEAR(psi_threshold(c), 0.5193361947109459, 1e-10);
}

TEST(PsiThreshold, OtherTheta) {
    SpectralConfig c = default_config(1000);
    c.theta = 0.5;
    EXPECT_NEAR(psi_threshold(c), 0.9714964390614667, 1e-10);
    c.theta = 2.0;
    EXPECT_NEAR(psi_threshold(c), 0.2700488182916855, 1e-10);
}

TEST(PsiThreshold, DecreasesWithTheta) {
    SpectralConfig c = default_config(1000);
    double prev = std::numeric_limits<double>::infinity();
    double prev_m = 0.0;
    for (double th = 0.1; th <= 3.0; th += 0.1) {
        c.theta = th;
        const double v = psi_threshold(c);
        const double m = minimax_block_length(1000, th).m_star;
        EXPECT_LT(v, prev) << "theta=" << th;
        EXPECT_GT(m, prev_m);
        prev = v;
        prev_m = m;
    }
}

TEST(PsiThreshold, RequiresDStarAboveTwo) {
    SpectralConfig c = default_config(1000);
    c.D_star = 2.0;
    EXPECT_THROW(psi_threshold(c), ConfigError);
}

TEST(EstimateTheta, RootConsistency) {
    EXPECT_NEAR(solve_theta(0.24730294986235518, 1000).theta, 1.0, 1e-6);
    EXPECT_FALSE(solve_theta(0.24730294986235518, 1000).at_boundary);
    EXPECT_NEAR(solve_theta(0.4626173519340317, 1000).theta, 0.5, 1e-6);
    const ThetaEstimate hi = solve_theta(100.0, 1000);
    EXPECT_TRUE(hi.at_boundary);
    EXPECT_EQ(hi.theta, 0.05);
    const ThetaEstimate lo = solve_theta(1e-6, 1000);
    EXPECT_TRUE(lo.at_boundary);
    EXPECT_EQ(lo.theta, 3.0);
}

TEST(EstimateTheta, RunsOnData) {
    const SpectralConfig c = default_config(1000);
    const FrequencyGrid g = build_frequency_grid(c);
    const ThetaEstimate t = estimate_theta(simulate({Model::M1, 1000}, 3), c, g);
    EXPECT_GT(t.theta, 0.0);
    EXPECT_LE(t.theta, 3.0);
    EXPECT_GT(t.s_star, 0.0);
}

TEST(Algorithm1, DrawsWithoutReplacement) {
    std::vector<int> pool(30);
    for (int i = 0; i < 30; ++i) pool[static_cast<std::size_t>(i)] = 100 + i;
    auto rng = make_rng(1, 2);
    std::vector<int> d = draw_without_replacement(pool, 10, rng);
    ASSERT_EQ(d.size(), 10u);
    std::sort(d.begin(), d.end());
    EXPECT_EQ(std::adjacent_find(d.begin(), d.end()), d.end());
    for (int v : d) EXPECT_TRUE(v >= 100 && v < 130);
    auto rng2 = make_rng(1, 2);
    EXPECT_EQ(draw_without_replacement({1, 2, 3}, 10, rng2).size(), 3u);
}

TEST(Algorithm1, StructuralInvariants) {
    const SpectralConfig c = default_config(1000);
    const FrequencyGrid g = build_frequency_grid(c);
    for (Model m : {Model::M1, Model::M6, Model::M7}) {
        for (std::uint64_t s = 0; s < 5; ++s) {
            const TimeSeries x = simulate({m, 1000}, 50 + s);
            const ChangePointSet cp = algorithm1(x, c, g, s);
            EXPECT_EQ(cp.m_hat, static_cast<int>(cp.estimates.size()));
            for (std::size_t i = 1; i < cp.estimates.size(); ++i)
                EXPECT_LT(cp.estimates[i - 1].t_hat, cp.estimates[i].t_hat);
            // Exclusion soundness, in detection order.
            std::vector<int> order;
            for (const auto& t : cp.trace)
                if (t.proceed) order.push_back(t.t_hat);
            for (std::size_t i = 0; i < order.size(); ++i)
                for (std::size_t k = 0; k < i; ++k) EXPECT_GT(std::abs(order[i] - order[k]), c.v_T);
            // Refinement dominance and draw ranges.
            SpectralEngine eng(x.demeaned().values(), c, g.pi_full);
            for (const Refinement& r : cp.refinements) {
                const double at_anchor = max_over(split_contrast(eng, r.anchor, c).D).value;
                const double at_chosen = max_over(split_contrast(eng, r.chosen, c).D).value;
                EXPECT_GE(at_chosen, at_anchor);
                for (int d : r.draws) {
                    EXPECT_GE(d, r.anchor - c.m_T + 1);
                    EXPECT_LE(d, r.anchor);
                    EXPECT_LE(max_over(split_contrast(eng, d, c).D).value, at_chosen);
                }
                if (r.anchor == 2 * c.m_T) EXPECT_TRUE(r.draws.empty());
                else EXPECT_EQ(static_cast<int>(r.draws.size()), c.K);
            }
        }
    }
}

TEST(Algorithm1, SeedDeterminismAcrossThreads) {
    const SpectralConfig c = default_config(1000);
    const FrequencyGrid g = build_frequency_grid(c);
    for (std::uint64_t s = 0; s < 4; ++s) {
        const TimeSeries x = simulate({Model::M6, 1000}, 90 + s);
        const ChangePointSet a = algorithm1(x, c, g, 7, {1});
        const ChangePointSet b = algorithm1(x, c, g, 7, {8});
        ASSERT_EQ(a.m_hat, b.m_hat);
        for (std::size_t i = 0; i < a.estimates.size(); ++i) {
            EXPECT_EQ(a.estimates[i].t_hat, b.estimates[i].t_hat);
            EXPECT_EQ(a.estimates[i].d_value, b.estimates[i].d_value);
            EXPECT_EQ(a.estimates[i].omega_hat, b.estimates[i].omega_hat);
        }
        for (std::size_t i = 0; i < a.refinements.size(); ++i) {
            EXPECT_EQ(a.refinements[i].draws, b.refinements[i].draws);
            EXPECT_EQ(a.refinements[i].chosen, b.refinements[i].chosen);
        }
        const ChangePointSet d = algorithm1(x, c, g, 8, {1});
        bool differs = false;
        for (std::size_t i = 0; i < a.refinements.size(); ++i) differs |= a.refinements[i].draws != d.refinements[i].draws;
        EXPECT_TRUE(differs);
    }
}

TEST(Algorithm1, ScaleInvariantDecisions) {
    const FrequencyGrid g = build_frequency_grid(default_config(1000));
    for (GateRule gate : {GateRule::Minimax, GateRule::ExtremeValue}) {
        SpectralConfig c = default_config(1000);
        c.gate = gate;
        for (std::uint64_t s = 0; s < 4; ++s) {
            const TimeSeries x = simulate({Model::M7, 1000}, 30 + s);
            const ChangePointSet a = algorithm1(x, c, g, 3);
            const ChangePointSet b = algorithm1(x.scaled(3.0), c, g, 3);
            ASSERT_EQ(a.m_hat, b.m_hat);
            for (std::size_t i = 0; i < a.estimates.size(); ++i) EXPECT_EQ(a.estimates[i].t_hat, b.estimates[i].t_hat);
            ASSERT_EQ(a.trace.size(), b.trace.size());
            for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].proceed, b.trace[i].proceed);
        }
    }
}

TEST(Algorithm1, ExtremeValueGateStopsOnFlatSpectra) {
    SpectralConfig c = default_config(1000);
    c.gate = GateRule::ExtremeValue;
    c.epsilon_f = 1.0;
    const FrequencyGrid g = build_frequency_grid(c);
    const ChangePointSet cp = algorithm1(TimeSeries(std::vector<double>(1000, 0.0)), c, g, 1);
    EXPECT_EQ(cp.m_hat, 0);
    ASSERT_EQ(cp.trace.size(), 1u);
    EXPECT_FALSE(cp.trace[0].proceed);
}

TEST(Algorithm1, LengthMismatch) {
    const SpectralConfig c = default_config(1000);
    EXPECT_THROW(algorithm1(white_noise(900, 1), c, build_frequency_grid(c), 1), SizeError);
}
