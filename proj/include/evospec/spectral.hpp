#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "kernels.hpp"

namespace evospec {

enum class Side { Left, Right };

struct TaperWindow {
    std::vector<double> weights;  // h(s / n_T), s = 0..n_T-1
    double h2_sum = 0.0;
};

inline TaperWindow make_taper(Taper, int n_T) {
    if (n_T < 1) throw ConfigError("taper length must be positive");
    TaperWindow h;
    h.weights.assign(static_cast<std::size_t>(n_T), 1.0);
    h.h2_sum = static_cast<double>(n_T);
    return h;
}

inline void check_window(int T, int n, int j, Side side) {
    const bool ok = side == Side::Left ? (j - n + 1 >= 1 && j <= T) : (j >= 0 && j + n <= T);
    if (!ok)
        throw IndexError(std::string(side == Side::Left ? "left" : "right") + " window at j=" +
                         std::to_string(j) + " with n_T=" + std::to_string(n) + " leaves [1, " +
                         std::to_string(T) + "]");
}

// Left:  sum_s h(s/n) X_{j-n+1+s} e^{-i omega s}
// Right: sum_s h(s/n) X_{j+n-s}   e^{-i omega s}
inline std::complex<double> local_dft(const TimeSeries& x, int j, Side side, double omega, const TaperWindow& h) {
    const int n = static_cast<int>(h.weights.size());
    check_window(x.size(), n, j, side);
    std::complex<double> d = 0.0;
    for (int s = 0; s < n; ++s) {
        const int t = side == Side::Left ? j - n + 1 + s : j + n - s;
        d += h.weights[static_cast<std::size_t>(s)] * x.at(t) * std::polar(1.0, -omega * s);
    }
    return d;
}

inline double local_periodogram(const TimeSeries& x, int j, Side side, double omega, const TaperWindow& h) {
    return std::norm(local_dft(x, j, side, omega, h)) / (2.0 * pi * h.h2_sum);
}

inline double fourier_frequency(int s, int n) { return 2.0 * pi * s / n; }

// Reference implementation: n_T - 1 direct periodogram sums, then the kernel
// sum over Fourier frequencies s = 1..n_T-1.
inline double smooth_local_periodogram(const TimeSeries& x, int j, Side side, double omega,
                                       const SpectralConfig& c) {
    const TaperWindow h = make_taper(c.taper, c.n_T);
    check_window(x.size(), c.n_T, j, side);
    double f = 0.0;
    for (int s = 1; s < c.n_T; ++s) {
        const double lam = fourier_frequency(s, c.n_T);
        const double w = periodized_window(c.smoother_kernel, c.b_WT, omega - lam);
        if (w != 0.0) f += w * local_periodogram(x, j, side, lam, h);
    }
    return 2.0 * pi / c.n_T * f;
}

// (n_T - 1) x nf weights (2 pi / n_T) W_T(omega_k - 2 pi s / n_T), row s-1.
inline std::vector<double> smoothing_matrix(const SpectralConfig& c, const std::vector<double>& freqs) {
    const std::size_t nf = freqs.size();
    std::vector<double> w(static_cast<std::size_t>(c.n_T - 1) * nf);
    for (int s = 1; s < c.n_T; ++s)
        for (std::size_t k = 0; k < nf; ++k)
            w[static_cast<std::size_t>(s - 1) * nf + k] =
                2.0 * pi / c.n_T * periodized_window(c.smoother_kernel, c.b_WT, freqs[k] - fourier_frequency(s, c.n_T));
    return w;
}

// Smoothed local spectra f_L(j, .) and f_R(j, .) on a fixed frequency list.
//
// Rows are keyed by the end e of the data segment X_{e-n+1..e}: the left
// estimate at j uses e = j, the right estimate at j uses e = j + n. With the
// rectangular taper the right DFT is a phase-rotated conjugate of the left one
// on the same segment, so both periodograms coincide.
//
// left()/right() compute missing rows by direct summation. fill_all() computes
// every row with a sliding DFT; afterwards the engine is read-only and safe to
// share between threads.
class SpectralEngine {
public:
    SpectralEngine(std::vector<double> x, const SpectralConfig& c, std::vector<double> freqs)
        : x_(std::move(x)), n_(c.n_T), T_(static_cast<int>(x_.size())), freqs_(std::move(freqs)) {
        if (c.taper != Taper::Rectangular) throw ConfigError("engine supports the rectangular taper only");
        if (n_ < 2 || n_ >= T_) throw SizeError("series too short for n_T=" + std::to_string(n_));
        nf_ = freqs_.size();
        W_ = smoothing_matrix(c, freqs_);
        tw_.resize(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) tw_[static_cast<std::size_t>(k)] = std::polar(1.0, -fourier_frequency(k, n_));
        const std::size_t rows = static_cast<std::size_t>(T_ - n_ + 1);
        rows_.assign(rows * nf_, 0.0);
        have_.assign(rows, 0);
    }

    int T() const { return T_; }
    int n() const { return n_; }
    std::size_t n_freq() const { return nf_; }
    const std::vector<double>& frequencies() const { return freqs_; }

    const double* left(int j) {
        check_window(T_, n_, j, Side::Left);
        return row(j);
    }
    const double* right(int j) {
        check_window(T_, n_, j, Side::Right);
        return row(j + n_);
    }
    double at(Side side, int j, std::size_t k) { return (side == Side::Left ? left(j) : right(j))[k]; }

    void fill_all() {
        std::vector<std::complex<double>> d(static_cast<std::size_t>(n_));
        std::vector<double> I(static_cast<std::size_t>(n_));
        for (int e = n_; e <= T_; ++e) {
            if ((e - n_) % n_ == 0) {
                direct_dft(e, d);
            } else {
                const double out = x_[static_cast<std::size_t>(e - n_ - 1)];
                const double in = x_[static_cast<std::size_t>(e - 1)];
                for (int s = 1; s < n_; ++s) {
                    auto& ds = d[static_cast<std::size_t>(s)];
                    ds = std::conj(tw_[static_cast<std::size_t>(s)]) * (ds - out + in);
                }
            }
            for (int s = 1; s < n_; ++s) I[static_cast<std::size_t>(s)] = std::norm(d[static_cast<std::size_t>(s)]) / (2.0 * pi * n_);
            smooth(I, slot(e));
            have_[static_cast<std::size_t>(e - n_)] = 1;
        }
    }

    // Direct-summation periodogram ordinates I(e, 2 pi s / n), s = 1..n-1 (index 0 unused).
    std::vector<double> periodogram_row(int e) const {
        std::vector<std::complex<double>> d(static_cast<std::size_t>(n_));
        direct_dft(e, d);
        std::vector<double> I(static_cast<std::size_t>(n_), 0.0);
        for (int s = 1; s < n_; ++s) I[static_cast<std::size_t>(s)] = std::norm(d[static_cast<std::size_t>(s)]) / (2.0 * pi * n_);
        return I;
    }

private:
    double* slot(int e) { return rows_.data() + static_cast<std::size_t>(e - n_) * nf_; }

    const double* row(int e) {
        double* p = slot(e);
        if (!have_[static_cast<std::size_t>(e - n_)]) {
            smooth(periodogram_row(e), p);
            have_[static_cast<std::size_t>(e - n_)] = 1;
        }
        return p;
    }

    void direct_dft(int e, std::vector<std::complex<double>>& d) const {
        const double* seg = x_.data() + (e - n_);
        for (int s = 1; s < n_; ++s) {
            std::complex<double> acc = 0.0;
            for (int t = 0; t < n_; ++t) acc += seg[t] * tw_[static_cast<std::size_t>((s * t) % n_)];
            d[static_cast<std::size_t>(s)] = acc;
        }
    }

    void smooth(const std::vector<double>& I, double* out) const {
        std::fill(out, out + nf_, 0.0);
        for (int s = 1; s < n_; ++s) {
            const double v = I[static_cast<std::size_t>(s)];
            const double* w = W_.data() + static_cast<std::size_t>(s - 1) * nf_;
            for (std::size_t k = 0; k < nf_; ++k) out[k] += v * w[k];
        }
    }

    std::vector<double> x_;
    int n_;
    int T_;
    std::vector<double> freqs_;
    std::size_t nf_ = 0;
    std::vector<double> W_;
    std::vector<std::complex<double>> tw_;
    std::vector<double> rows_;
    std::vector<char> have_;
};

struct LocalSpectrum {
    Side side = Side::Left;
    std::vector<int> time_indices;  // contiguous, ascending
    std::vector<double> frequencies;
    std::vector<double> estimates;  // row-major [time][frequency]

    bool has(int j) const {
        return !time_indices.empty() && j >= time_indices.front() && j <= time_indices.back();
    }
    double at(int j, std::size_t k) const {
        if (!has(j)) throw IndexError("time index " + std::to_string(j) + " not in spectrum");
        return estimates[static_cast<std::size_t>(j - time_indices.front()) * frequencies.size() + k];
    }
    std::size_t column(double omega) const {
        for (std::size_t k = 0; k < frequencies.size(); ++k)
            if (std::abs(frequencies[k] - omega) <= 1e-12) return k;
        throw IndexError("frequency " + std::to_string(omega) + " not in spectrum");
    }
};

inline LocalSpectrum spectrum_field(const TimeSeries& x, Side side, const SpectralConfig& c, const FrequencyGrid& g) {
    if (x.size() != c.T) throw SizeError("series length differs from config T");
    if (x.size() < 2 * c.n_T + c.m_T) throw SizeError("series too short for a complete block");
    SpectralEngine eng(x.values(), c, g.pi_full);
    eng.fill_all();
    LocalSpectrum out;
    out.side = side;
    out.frequencies = g.pi_full;
    const int lo = side == Side::Left ? c.n_T : 1;
    const int hi = side == Side::Left ? c.T : c.T - c.n_T;
    const std::size_t nf = g.pi_full.size();
    out.estimates.reserve(static_cast<std::size_t>(hi - lo + 1) * nf);
    for (int j = lo; j <= hi; ++j) {
        out.time_indices.push_back(j);
        const double* r = side == Side::Left ? eng.left(j) : eng.right(j);
        out.estimates.insert(out.estimates.end(), r, r + nf);
    }
    return out;
}

}  // namespace evospec
