#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "asiplab/chain.hpp"
#include "asiplab/coupling.hpp"
#include "asiplab/martingale.hpp"
#include "asiplab/parallel.hpp"
#include "asiplab/stattests.hpp"
#include "asiplab/transfer.hpp"

namespace asiplab {

// ---------------------------------------------------------------------------
// Variance of the normalized sums: truncated autocovariance series through
// the transfer operator, cross-checked by batch means on one long orbit.
// The covariance at lag k uses nu(K^k(f - nu f) * f), the operator form of
// nu((f - nu f) f o T^k).
struct VarianceEstimate {
    double sigma2_series = 0.0;
    int lag_cutoff = 0;
    double tail_bound = 0.0;
    double sigma2_batch = 0.0;
    std::size_t n_used = 0;
    bool degenerate = false;
    bool inconsistent = false;
    std::vector<double> covariances;  // lags 0..K
};

inline VarianceEstimate sigma2(const AnalyticTransfer& op, const Observable& f, int lag_cutoff,
                               std::size_t orbit_n, std::uint64_t seed) {
    if (lag_cutoff < 1) throw ConfigError("sigma2: lag cutoff must be >= 1");
    VarianceEstimate est;
    est.lag_cutoff = lag_cutoff;
    est.n_used = orbit_n;

    GridFn base = op.sample(f.eval);
    GridFn g = op.centered(base);
    est.covariances.push_back(op.nu_grid([&] {
        GridFn sq(op.cells());
        for (std::size_t i = 0; i < op.cells(); ++i) sq[i] = sqr(g[i]);
        return sq;
    }()));
    Accumulator series;
    series.add(est.covariances[0]);
    for (int k = 1; k <= lag_cutoff; ++k) {
        g = op.apply(g);
        Accumulator ip;
        for (std::size_t i = 0; i < op.cells(); ++i) ip.add(op.cell_masses()[i] * g[i] * base[i]);
        est.covariances.push_back(ip.value());
        series.add(2.0 * ip.value());
    }
    est.sigma2_series = series.value();

    // geometric tail bound from the decay of |cov_k| over the top half lags
    {
        std::vector<double> xs, ys;
        for (int k = lag_cutoff / 2; k <= lag_cutoff; ++k)
            if (std::fabs(est.covariances[k]) > 1e-15) {
                xs.push_back(k);
                ys.push_back(std::log(std::fabs(est.covariances[k])));
            }
        if (xs.size() >= 2) {
            const LineFit fit = fit_line(xs, ys);
            const double rho = std::exp(fit.slope);
            if (rho < 1.0)
                est.tail_bound = 2.0 * std::fabs(est.covariances[lag_cutoff]) * rho / (1.0 - rho);
            else
                est.tail_bound = std::fabs(est.covariances[lag_cutoff]) * lag_cutoff;
        }
    }

    // batch means on a single stationary orbit with floor(sqrt(n)) batches
    if (orbit_n >= 100) {
        RandomStream rng(seed, 0);
        const auto b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(orbit_n))));
        const std::size_t m = orbit_n / b;
        const std::vector<double> orbit = sample_forward_orbit(op.map(), b * m, rng);
        std::vector<double> means(b, 0.0);
        double grand = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            Accumulator acc;
            for (std::size_t i = 0; i < m; ++i) acc.add(f.eval(orbit[j * m + i]));
            means[j] = acc.value() / static_cast<double>(m);
            grand += means[j];
        }
        grand /= static_cast<double>(b);
        double s = 0.0;
        for (double mu : means) s += sqr(mu - grand);
        est.sigma2_batch = static_cast<double>(m) * s / static_cast<double>(b - 1);
        est.n_used = b * m;
    }

    const double f2 = op.nu_fn([&](double x) { return sqr(f.eval(x)); });
    est.degenerate = est.covariances[0] < 1e-13 * std::max(1.0, f2);
    est.inconsistent = est.sigma2_series < -est.tail_bound;
    return est;
}

// ---------------------------------------------------------------------------
// CLT: empirical law of S_n / (sigma sqrt(n)) across replicas vs N(0,1).
enum class SumSource { ForwardOrbit, BackwardChain };

struct CltReport {
    double ks = 0.0;
    double pvalue = 0.0;
    std::size_t reps = 0;
    SumSource source = SumSource::ForwardOrbit;
};

inline CltReport clt_test(const IntervalMap& map, const Observable& f, double nu_f,
                          SumSource source, std::size_t n, std::size_t reps, double sigma,
                          std::uint64_t seed, int workers = 1) {
    if (reps < 1000) throw ConfigError("clt_test: need at least 1e3 replicas");
    if (!(sigma > 0.0)) throw ConfigError("clt_test: degenerate sigma");
    std::vector<double> stats(reps);
    parallel_replicas(reps, workers, [&](std::size_t r) {
        RandomStream rng(seed, r);
        Accumulator acc;
        if (source == SumSource::ForwardOrbit) {
            const std::vector<double> orbit = sample_forward_orbit(map, n, rng);
            for (std::size_t i = 0; i < n; ++i) acc.add(f.eval(orbit[i]) - nu_f);
        } else {
            double y = map.inv_cdf(rng.uniform_pos());
            for (std::size_t i = 0; i < n; ++i) {
                y = map.sample_preimage(y, rng.uniform_pos());
                acc.add(f.eval(y) - nu_f);
            }
        }
        stats[r] = acc.value() / (sigma * std::sqrt(static_cast<double>(n)));
    });
    CltReport rep;
    rep.reps = reps;
    rep.source = source;
    rep.ks = ks_statistic(std::move(stats), [](double x) { return normal_cdf(x); });
    rep.pvalue = ks_pvalue(rep.ks, reps);
    return rep;
}

// ---------------------------------------------------------------------------
// LIL envelope along one orbit: |S_n| / sqrt(2 sigma^2 n log log n) at dyadic
// checkpoints.
struct LilReport {
    std::vector<std::size_t> ns;
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double final_ratio = 0.0;
    bool trend_ok = true;  // last checkpoint < 2x median of earlier ones
};

inline LilReport lil_envelope(const IntervalMap& map, const Observable& f, double nu_f,
                              std::size_t n_max, double sigma, std::uint64_t seed,
                              std::uint64_t stream = 0) {
    if (n_max < (std::size_t{1} << 16)) throw ConfigError("lil_envelope: n_max must be >= 2^16");
    LilReport rep;
    RandomStream rng(seed, stream);
    const std::vector<double> orbit = sample_forward_orbit(map, n_max, rng);
    Accumulator s;
    std::size_t next = std::size_t{1} << 10;
    for (std::size_t i = 1; i <= n_max; ++i) {
        s.add(f.eval(orbit[i - 1]) - nu_f);
        if (i == next) {
            const double nn = static_cast<double>(i);
            const double ratio = std::fabs(s.value()) /
                                 std::sqrt(2.0 * sigma * sigma * nn * std::log(std::log(nn)));
            rep.ns.push_back(i);
            rep.ratios.push_back(ratio);
            next <<= 1;
        }
    }
    rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.final_ratio = rep.ratios.back();
    if (rep.ratios.size() >= 3) {
        std::vector<double> earlier(rep.ratios.begin(), rep.ratios.end() - 1);
        rep.trend_ok = rep.final_ratio < 2.0 * median_of(earlier) + 1e-12;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// ASIP rate experiment: couple the reverse MDS at the largest horizon, track
// running sup errors at dyadic checkpoints, fit the log-log slope of the
// median coupled sup-error.
struct RateFit {
    std::vector<std::size_t> ns;
    std::vector<double> sup_errors;       // median over replicas of sup_k<=n |S_k - sum Z|
    std::vector<double> mart_residuals;   // median of sup_k<=n |S_k - M*_k|
    std::vector<double> loglog_ratios;    // median sup / sqrt(n log log n)
    double exponent = 0.0;
    double envelope_target = 0.0;  // 1/p
};

struct AsipSourceSpec {
    MFunctionPtr mfun;                          // stationary mode
    std::shared_ptr<const BlockScheme> blocks;  // block mode (unbounded f)
    const Observable* base_f = nullptr;
    double nu_f = 0.0;
    double sigma = 0.0;
    double p = 4.0;
};

inline RateFit asip_rate(const AsipSourceSpec& spec, const std::vector<std::size_t>& ns,
                         std::size_t reps, std::uint64_t seed, int workers = 1,
                         const CouplingOptions& base_opts = {}) {
    if (ns.size() < 3) throw ConfigError("asip_rate: need at least 3 sizes for a fit");
    const std::size_t n_max = *std::max_element(ns.begin(), ns.end());
    const IntervalMap& map =
        spec.blocks ? spec.blocks->level(1).mfun->op().map() : spec.mfun->op().map();

    std::vector<std::vector<double>> sup_z(ns.size(), std::vector<double>(reps));
    std::vector<std::vector<double>> sup_m(ns.size(), std::vector<double>(reps));
    parallel_replicas(reps, workers, [&](std::size_t r) {
        RandomStream rng(seed, r);
        const double v0 = map.inv_cdf(rng.uniform_pos());
        CouplingOptions opts = base_opts;
        opts.sigma_iid = spec.sigma;
        CouplingTrace trace;
        std::vector<double> orbit;
        if (spec.blocks) {
            MapMdsSource src(spec.blocks, n_max, v0);
            trace = couple(src, RandomStream(seed ^ 0x5eedc0de, r), opts);
            orbit = src.orbit();
        } else {
            MapMdsSource src(spec.mfun, n_max, v0);
            trace = couple(src, RandomStream(seed ^ 0x5eedc0de, r), opts);
            orbit = src.orbit();
        }
        double s = 0.0, m = 0.0, z = 0.0;
        double worst_z = 0.0, worst_m = 0.0;
        std::size_t ci = 0;
        for (std::size_t k = 1; k <= n_max; ++k) {
            s += spec.base_f->eval(orbit[k - 1]) - spec.nu_f;
            m += trace.increments[k - 1];
            z += trace.gaussian_iid[k - 1];
            worst_z = std::max(worst_z, std::fabs(s - z));
            worst_m = std::max(worst_m, std::fabs(s - m));
            if (ci < ns.size() && k == ns[ci]) {
                sup_z[ci][r] = worst_z;
                sup_m[ci][r] = worst_m;
                ++ci;
            }
        }
    });

    RateFit fit;
    fit.ns = ns;
    fit.envelope_target = 1.0 / spec.p;
    std::vector<double> xs, ys;
    for (std::size_t c = 0; c < ns.size(); ++c) {
        fit.sup_errors.push_back(median_of(sup_z[c]));
        fit.mart_residuals.push_back(median_of(sup_m[c]));
        const double nn = static_cast<double>(ns[c]);
        fit.loglog_ratios.push_back(fit.sup_errors.back() /
                                    std::sqrt(nn * std::log(std::log(nn))));
        xs.push_back(std::log(nn));
        ys.push_back(std::log(std::max(fit.sup_errors.back(), 1e-300)));
    }
    fit.exponent = fit_line(xs, ys).slope;
    return fit;
}

// ---------------------------------------------------------------------------
// Covariance inequalities against the phi lower bounds. The left sides use
// exact operator compositions; phi enters the right side as a grid lower
// bound, so a reported violation prints both values rather than throwing.
struct CovarianceBoundRow {
    int k = 0;
    double lhs1 = 0.0, rhs1 = 0.0;
    double lhs2 = 0.0, rhs2 = 0.0;
    bool ok1 = true, ok2 = true;
};

struct CovarianceBoundReport {
    std::vector<CovarianceBoundRow> rows;
    bool all_ok = true;
    double p = 0.0;
};

inline double norm_p(const AnalyticTransfer& op, const GridFn& g, double p) {
    Accumulator a;
    for (std::size_t i = 0; i < op.cells(); ++i)
        a.add(op.cell_masses()[i] * std::pow(std::fabs(g[i]), p));
    return std::pow(a.value(), 1.0 / p);
}

inline CovarianceBoundReport check_covariance_bounds(const AnalyticTransfer& op, const Observable& f,
                                   const Observable& g, double p, int horizon,
                                   const PhiReport& phi1, const PhiReport& phi2,
                                   int gap_scan = 8) {
    if (!(p >= 2.0)) throw ConfigError("check_covariance_bounds: p must be >= 2 for both bounds");
    if (horizon > static_cast<int>(phi1.values.size()) ||
        horizon > static_cast<int>(phi2.values.size()))
        throw ConfigError("check_covariance_bounds: phi reports shorter than the horizon");
    CovarianceBoundReport rep;
    rep.p = p;
    const double mf = norm_p(op, op.sample(f.eval), p);
    const double mg = norm_p(op, op.sample(g.eval), p);

    GridFn fc = op.centered(op.sample(f.eval));
    GridFn gc = op.centered(op.sample(g.eval));

    // first bound: ||K^k f - nu f||_p  <= 2 (2 phi1(k))^{(p-1)/p} ||f||_p
    std::vector<double> lhs1;
    {
        GridFn w = fc;
        for (int k = 1; k <= horizon; ++k) {
            w = op.apply(w, /*pw_const=*/true);
            lhs1.push_back(norm_p(op, w, p));
        }
    }
    // second bound at (i,j) = (k+gap, k), scanning the gap:
    // ||K^k(g0 * K^gap f0) - nu(.)||_{p/2} <= 8 (4 phi2(k))^{(p-2)/p} ||f|| ||g||
    std::vector<double> lhs2(horizon, 0.0);
    {
        GridFn kgf = fc;
        for (int gap = 0; gap <= gap_scan; ++gap) {
            if (gap > 0) kgf = op.apply(kgf, /*pw_const=*/true);
            GridFn prod(op.cells());
            for (std::size_t i = 0; i < op.cells(); ++i) prod[i] = gc[i] * kgf[i];
            GridFn w = op.centered(prod);
            for (int k = 1; k <= horizon; ++k) {
                w = op.apply(w, /*pw_const=*/true);
                lhs2[k - 1] = std::max(lhs2[k - 1], norm_p(op, w, 0.5 * p));
            }
        }
    }
    for (int k = 1; k <= horizon; ++k) {
        CovarianceBoundRow row;
        row.k = k;
        row.lhs1 = lhs1[k - 1];
        row.rhs1 = 2.0 * std::pow(2.0 * phi1.values[k - 1], (p - 1.0) / p) * mf;
        row.ok1 = row.lhs1 <= row.rhs1 * (1.0 + 1e-9);
        row.lhs2 = lhs2[k - 1];
        row.rhs2 = 8.0 * std::pow(4.0 * phi2.values[k - 1], (p - 2.0) / p) * mf * mg;
        row.ok2 = row.lhs2 <= row.rhs2 * (1.0 + 1e-9);
        rep.all_ok = rep.all_ok && row.ok1 && row.ok2;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Cauchy-tail check for reverse series sum xi_k: medians over replicas of
// max_{m in [r, N]} |Z_m - Z_N| at increasing r.
struct ReverseSeriesReport {
    std::vector<std::size_t> checkpoints;
    std::vector<double> tail_medians;
    double decay_ratio = 0.0;  // last median / first median
    bool shrinking = true;     // monotone decrease and decay_ratio < 0.6
};

inline ReverseSeriesReport reverse_series_check(
    const std::function<std::vector<double>(RandomStream&)>& make_increments,
    const std::vector<std::size_t>& checkpoints, std::size_t reps, std::uint64_t seed,
    int workers = 1) {
    ReverseSeriesReport rep;
    rep.checkpoints = checkpoints;
    std::vector<std::vector<double>> tails(checkpoints.size(), std::vector<double>(reps, 0.0));
    parallel_replicas(reps, workers, [&](std::size_t r) {
        RandomStream rng(seed, r);
        const std::vector<double> xi = make_increments(rng);
        std::vector<double> z(xi.size() + 1, 0.0);
        for (std::size_t k = 0; k < xi.size(); ++k) z[k + 1] = z[k] + xi[k];
        const double zn = z.back();
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            double worst = 0.0;
            for (std::size_t m = checkpoints[c]; m < z.size(); ++m)
                worst = std::max(worst, std::fabs(z[m] - zn));
            tails[c][r] = worst;
        }
    });
    for (std::size_t c = 0; c < checkpoints.size(); ++c)
        rep.tail_medians.push_back(median_of(tails[c]));
    for (std::size_t c = 1; c < rep.tail_medians.size(); ++c)
        rep.shrinking = rep.shrinking && rep.tail_medians[c] < rep.tail_medians[c - 1] + 1e-15;
    // a pure random walk also has nonincreasing tail maxima over nested
    // windows; genuine convergence shows a clear decay across checkpoints
    rep.decay_ratio = rep.tail_medians.front() > 0.0
                          ? rep.tail_medians.back() / rep.tail_medians.front()
                          : 0.0;
    rep.shrinking = rep.shrinking && rep.decay_ratio < 0.6;
    return rep;
}

}  // namespace asiplab
