#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace asiplab {

inline constexpr const char* kVersion = "0.1.0";

// Tolerances used by construction-time validation. Experiment verdict
// thresholds live in runner::Thresholds, not here.
inline constexpr double kWeightSumTol = 1e-10;
inline constexpr double kInverseRoundTripTol = 1e-12;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double sqr(double x) { return x * x; }

// log(log(x)) clamped so envelope formulas stay finite for small arguments.
inline double loglog_safe(double x) {
    return std::log(std::max(std::log(std::max(x, 1.000001)), 1e-12));
}

// Least-squares line fit y ~ a + b*x. Returns {intercept, slope, rms_residual}.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rms_residual = 0.0;
    std::size_t points = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    LineFit out;
    const std::size_t n = xs.size();
    out.points = n;
    if (n < 2) return out;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-300) return out;
    out.slope = (n * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i)
        ss += sqr(ys[i] - out.intercept - out.slope * xs[i]);
    out.rms_residual = std::sqrt(ss / n);
    return out;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (hi + v[mid - 1]);
}

// Kahan-compensated accumulator; keeps fan-out reductions deterministic and
// accurate when partial sums are merged in fixed order.
struct Accumulator {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace asiplab
