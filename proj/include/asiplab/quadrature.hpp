#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "asiplab/common.hpp"

namespace asiplab {

// 16-point Gauss-Legendre rule on [-1,1] (positive nodes; rule is symmetric).
namespace detail {
inline constexpr double kGlNode[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr double kGlWeight[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
}  // namespace detail

template <typename F>
double gl16(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0;
    for (int i = 0; i < 8; ++i) {
        const double dx = r * detail::kGlNode[i];
        s += detail::kGlWeight[i] * (f(c - dx) + f(c + dx));
    }
    return s * r;
}

// Composite GL16 over [0,1] split at the given breakpoints, each smooth piece
// further subdivided so no panel exceeds max_panel. Used when a quadrature
// needs to beat 1e-8; the 2^16 midpoint grid remains the workhorse elsewhere.
template <typename F>
double integrate_piecewise(F&& f, std::vector<double> breakpoints, double max_panel = 1.0 / 512.0) {
    breakpoints.push_back(0.0);
    breakpoints.push_back(1.0);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end(),
                                  [](double a, double b) { return std::fabs(a - b) < 1e-15; }),
                      breakpoints.end());
    Accumulator acc;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        double a = std::max(0.0, breakpoints[i]);
        double b = std::min(1.0, breakpoints[i + 1]);
        if (b <= a) continue;
        const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
        const double w = (b - a) / panels;
        for (int p = 0; p < panels; ++p) acc.add(gl16(f, a + p * w, a + (p + 1) * w));
    }
    return acc.value();
}

// Integral of f over (0,1] when f may have an integrable singularity at 0:
// dyadic refinement toward the origin. Serves as an independent oracle for
// unbounded-observable moments.
template <typename F>
double integrate_singular_origin(F&& f, int levels = 400) {
    Accumulator acc;
    double hi = 1.0;
    for (int j = 0; j < levels; ++j) {
        double lo = hi * 0.5;
        acc.add(gl16(f, lo, hi));
        hi = lo;
    }
    return acc.value();
}

}  // namespace asiplab
