#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "asiplab/common.hpp"

namespace asiplab {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

// Kolmogorov limiting tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::exp(-2.0 * sqr(k * lambda));
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, s));
}

// One-sample KS statistic against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::fabs(f - i / n));
        d = std::max(d, std::fabs((i + 1) / n - f));
    }
    return d;
}

inline double ks_pvalue(double d, std::size_t n) {
    return kolmogorov_q(d * std::sqrt(static_cast<double>(n)));
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                                  static_cast<double>(j) / b.size()));
    }
    return d;
}

inline double ks_two_sample_critical(std::size_t n, std::size_t m, double c_alpha = 1.628) {
    return c_alpha * std::sqrt((n + m) / (static_cast<double>(n) * m));
}

// Regularized lower incomplete gamma P(a,x): series + continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 0.0;
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi2_pvalue(double stat, double dof) {
    return 1.0 - gamma_p(0.5 * dof, 0.5 * stat);
}

// Pearson chi-square of observed counts against expected probabilities.
struct Chi2Result {
    double stat = 0.0;
    double dof = 0.0;
    double pvalue = 1.0;
};

inline Chi2Result chi2_gof(const std::vector<double>& observed, const std::vector<double>& probs,
                           double total) {
    Chi2Result r;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = probs[i] * total;
        if (e > 0.0) r.stat += sqr(observed[i] - e) / e;
    }
    r.dof = static_cast<double>(observed.size() - 1);
    r.pvalue = chi2_pvalue(r.stat, r.dof);
    return r;
}

inline double autocorrelation(const std::vector<double>& x, std::size_t lag) {
    if (x.size() <= lag + 1) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += sqr(x[i] - mean);
        if (i + lag < x.size()) num += (x[i] - mean) * (x[i + lag] - mean);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace asiplab
