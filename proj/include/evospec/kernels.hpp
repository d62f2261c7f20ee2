#pragma once

#include <cmath>

#include "core.hpp"

namespace evospec {

// Smoothing kernels W, each integrating to one. Parzen and Bartlett live on
// [-pi, pi]; the uniform kernel lives on [-1/2, 1/2].
inline double smoother_support(SmootherKernel k) {
    return k == SmootherKernel::Uniform ? 0.5 : pi;
}

inline double smoother_density(SmootherKernel k, double beta) {
    const double a = std::abs(beta);
    switch (k) {
        case SmootherKernel::Parzen: {
            const double x = a / pi;
            if (x <= 0.5) return (1.0 - 6.0 * x * x + 6.0 * x * x * x) / (0.75 * pi);
            if (x <= 1.0) return 2.0 * (1.0 - x) * (1.0 - x) * (1.0 - x) / (0.75 * pi);
            return 0.0;
        }
        case SmootherKernel::Bartlett: {
            const double x = a / pi;
            return x <= 1.0 ? (1.0 - x) / pi : 0.0;
        }
        case SmootherKernel::Uniform:
            return a <= 0.5 ? 1.0 : 0.0;
    }
    return 0.0;
}

// W_T(x) = sum_k b^{-1} W((x + 2 pi k) / b), truncated to the kernel support.
inline double periodized_window(SmootherKernel k, double b, double x) {
    const double reach = smoother_support(k) * b;
    const int lo = static_cast<int>(std::floor((-reach - x) / (2.0 * pi)));
    const int hi = static_cast<int>(std::ceil((reach - x) / (2.0 * pi)));
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += smoother_density(k, (x + 2.0 * pi * j) / b) / b;
    return s;
}

inline double lrv_weight(LrvKernel, double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 1.0 - a : 0.0;
}

}  // namespace evospec
