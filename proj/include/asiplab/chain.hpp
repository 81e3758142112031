#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asiplab/maps.hpp"
#include "asiplab/rng.hpp"
#include "asiplab/stattests.hpp"
#include "asiplab/transfer.hpp"

namespace asiplab {

// Backward Markov chain path: Y_0 ~ nu, each step walks one inverse branch,
// so T(Y_{k+1}) = Y_k exactly.
struct ChainPath {
    std::vector<double> states;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

inline ChainPath sample_path(const IntervalMap& map, std::size_t n, RandomStream& rng,
                             std::uint64_t seed = 0, std::uint64_t stream = 0) {
    if (n < 1) throw ConfigError("sample_path: n must be >= 1");
    ChainPath path;
    path.seed = seed;
    path.stream = stream;
    path.states.resize(n + 1);
    path.states[0] = map.inv_cdf(rng.uniform_pos());
    for (std::size_t k = 0; k < n; ++k)
        path.states[k + 1] = map.sample_preimage(path.states[k], rng.uniform_pos());
    return path;
}

// Two-sample comparison of (T, ..., T^n) under nu with the reversed chain
// (Y_n, ..., Y_1): per-coordinate KS plus 1-D projections x + pi*y of
// consecutive pairs.
struct DualityReport {
    struct Row {
        std::string label;
        double ks = 0.0;
        double critical = 0.0;
        bool pass = false;
    };
    std::vector<Row> rows;
    std::size_t reps = 0;
    bool all_pass = true;
};

inline DualityReport duality_test(const IntervalMap& map, int n, std::size_t reps,
                                  std::uint64_t seed) {
    if (n < 1 || n > 8) throw ConfigError("duality_test: window must lie in [1,8]");
    if (reps < 10000) throw ConfigError("duality_test: need at least 1e4 replicas");

    // forward[j][r] = T^{j+1} x0 ; chain[j][r] = Y_{n-j} (reversed path)
    std::vector<std::vector<double>> fwd(n), bwd(n);
    for (int j = 0; j < n; ++j) {
        fwd[j].resize(reps);
        bwd[j].resize(reps);
    }
    for (std::size_t r = 0; r < reps; ++r) {
        RandomStream rng(seed, 2 * r);
        double x = map.inv_cdf(rng.uniform_pos());
        for (int j = 0; j < n; ++j) {
            x = map.forward(x);
            fwd[j][r] = x;
        }
        RandomStream rng2(seed, 2 * r + 1);
        ChainPath path = sample_path(map, static_cast<std::size_t>(n), rng2);
        for (int j = 0; j < n; ++j) bwd[j][r] = path.states[n - j];
    }

    DualityReport rep;
    rep.reps = reps;
    const double crit = ks_two_sample_critical(reps, reps);
    auto add_row = [&](const std::string& label, std::vector<double> a, std::vector<double> b) {
        DualityReport::Row row;
        row.label = label;
        row.ks = ks_two_sample(std::move(a), std::move(b));
        row.critical = crit;
        row.pass = row.ks < crit;
        rep.all_pass = rep.all_pass && row.pass;
        rep.rows.push_back(row);
    };
    for (int j = 0; j < n; ++j)
        add_row("coord" + std::to_string(j + 1), fwd[j], bwd[j]);
    constexpr double kPi = 3.141592653589793;
    for (int j = 0; j + 1 < n; ++j) {
        std::vector<double> a(reps), b(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            a[r] = fwd[j][r] + kPi * fwd[j + 1][r];
            b[r] = bwd[j][r] + kPi * bwd[j + 1][r];
        }
        add_row("pair" + std::to_string(j + 1) + std::to_string(j + 2), std::move(a), std::move(b));
    }
    return rep;
}

// phi-dependence coefficients. The essential sup over the state and the sup
// over thresholds/index tuples are taken over finite grids, so every value is
// a certified lower bound of the definition's sup; gaps beyond gap_max are
// not scanned.
struct PhiReport {
    int k = 1;
    std::vector<double> values;  // phi_{k,Y}(n), n = 1..N
    double rho_fit = 0.0;
    int gap_max = 0;
    int thresholds = 0;
};

inline PhiReport phi_coefficient(const AnalyticTransfer& op, int k, int N, int thresholds,
                                 int gap_max = 16, int pair_thresholds = 8) {
    if (thresholds < 256) throw ConfigError("phi_coefficient: need at least 256 thresholds");
    if (k != 1 && k != 2) throw ConfigError("phi_coefficient: k must be 1 or 2");
    PhiReport rep;
    rep.k = k;
    rep.gap_max = gap_max;
    rep.thresholds = thresholds;
    rep.values.assign(N, 0.0);

    // l = 1 term: sup_x || K^n 1_{<=x} - nu(1_{<=x}) ||_inf, evaluated for
    // every n in one sweep per threshold.
    // Indicators are centered by their grid-quadrature mean so the iterate is
    // exactly K^n applied to a cell-resolved indicator minus its own mean.
    const int scan = (k == 2) ? gap_max : 0;
    std::vector<double> single(N + scan, 0.0);
    for (int t = 0; t < thresholds; ++t) {
        const double x = (t + 1.0) / (thresholds + 1.0);
        GridFn g = op.centered(op.sample([x](double y) { return y <= x ? 1.0 : 0.0; }));
        for (int n = 1; n <= N + scan; ++n) {
            g = op.apply(g, /*pw_const=*/true);
            single[n - 1] = std::max(single[n - 1], g.max_abs());
        }
    }
    // The definition's sup runs over i >= n; take the suffix max over the
    // computed horizon.
    for (int i = static_cast<int>(single.size()) - 2; i >= 0; --i)
        single[i] = std::max(single[i], single[i + 1]);
    for (int n = 1; n <= N; ++n) rep.values[n - 1] = single[n - 1];

    if (k == 2) {
        // Pair term via Q_gap: E(g(Y_0,Y_gap)|Y_0=x) factorizes for products
        // of indicators, then compose with K^i1.
        const int ks = pair_thresholds;
        std::vector<GridFn> kg_ind(ks * (gap_max + 1));
        for (int t = 0; t < ks; ++t) {
            const double x2 = (t + 1.0) / (ks + 1.0);
            GridFn g = op.centered(op.sample([x2](double y) { return y <= x2 ? 1.0 : 0.0; }));
            for (int gsep = 0; gsep <= gap_max; ++gsep) {
                if (gsep > 0) g = op.apply(g, /*pw_const=*/true);
                kg_ind[t * (gap_max + 1) + gsep] = g;
            }
        }
        for (int t1 = 0; t1 < ks; ++t1) {
            const double x1 = (t1 + 1.0) / (ks + 1.0);
            GridFn ind1 =
                op.centered(op.sample([x1](double y) { return y <= x1 ? 1.0 : 0.0; }));
            for (int t2 = 0; t2 < ks; ++t2) {
                for (int gsep = 0; gsep <= gap_max; ++gsep) {
                    const GridFn& k2 = kg_ind[t2 * (gap_max + 1) + gsep];
                    GridFn prod(op.cells());
                    for (std::size_t i = 0; i < op.cells(); ++i)
                        prod[i] = ind1[i] * k2[i];
                    GridFn w = op.centered(prod);
                    // w after i1 applications covers index pair (i1, i1+gsep),
                    // contributing to phi_2(n) for every n <= i1.
                    for (int i1 = 1; i1 <= N + gap_max - gsep; ++i1) {
                        w = op.apply(w, /*pw_const=*/true);
                        const double v = w.max_abs();
                        const int n_hi = std::min(N, i1);
                        for (int n = 1; n <= n_hi; ++n)
                            rep.values[n - 1] = std::max(rep.values[n - 1], v);
                    }
                }
            }
        }
    }

    std::vector<double> xs, ys;
    for (int n = 1; n <= N; ++n)
        if (rep.values[n - 1] > 1e-14) {
            xs.push_back(n);
            ys.push_back(std::log(rep.values[n - 1]));
        }
    LineFit fit = fit_line(xs, ys);
    rep.rho_fit = xs.size() >= 2 ? std::exp(fit.slope) : 0.0;
    return rep;
}

// Partial sums of sum_k k^{1/sqrt(3)-1/2} phi_2^{1/2}(k). Grid phi values
// stall at a discretization floor on non-dyadic maps; raw values are used up
// to the first minimum and the fitted geometric rate extends the series
// beyond it (floor_index records the splice; floor_index == horizon means the
// raw values were used throughout).
struct RateConditionSum {
    double total = 0.0;
    double last_increment = 0.0;
    double tail_fraction = 1.0;
    int floor_index = 0;
    bool convergent = false;
};

inline RateConditionSum rate_condition_sum(const PhiReport& phi2, int extend_to = 400) {
    RateConditionSum out;
    const auto& v = phi2.values;
    if (v.empty()) return out;
    int n0 = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] < v[n0]) n0 = static_cast<int>(k);
    out.floor_index = n0 + 1;
    // rate over the decaying prefix
    std::vector<double> xs, ys;
    for (int k = 0; k <= n0; ++k)
        if (v[k] > 1e-300) {
            xs.push_back(k + 1.0);
            ys.push_back(std::log(v[k]));
        }
    const LineFit fit = fit_line(xs, ys);
    const double rho = xs.size() >= 2 ? std::exp(fit.slope) : 1.0;
    constexpr double kExp = 0.5773502691896258 - 0.5;
    Accumulator acc;
    double inc = 0.0;
    for (int k = 1; k <= extend_to; ++k) {
        double val;
        if (k <= n0 + 1)
            val = std::max(v[k - 1], 0.0);
        else if (rho < 1.0)
            val = std::max(v[n0], 0.0) * std::pow(rho, k - (n0 + 1));
        else
            val = std::max(v[std::min<std::size_t>(k - 1, v.size() - 1)], 0.0);
        inc = std::pow(static_cast<double>(k), kExp) * std::sqrt(val);
        acc.add(inc);
    }
    out.total = acc.value();
    out.last_increment = inc;
    out.tail_fraction = out.total > 0.0 ? inc / out.total : 0.0;
    out.convergent = rho < 1.0;
    return out;
}

// Exact backward law of the doubling chain: K^n 1_{(-inf,x]}(y); oracle for
// phi tests.
inline double doubling_indicator_power(double x, double y, int n) {
    const double scale = std::pow(2.0, n);
    double cnt = std::floor(scale * x - y) + 1.0;
    if (cnt < 0.0) cnt = 0.0;
    if (cnt > scale) cnt = scale;
    return cnt / scale;
}

}  // namespace asiplab
