#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "asiplab/brownian.hpp"
#include "asiplab/martingale.hpp"

namespace asiplab {

// Supplies, in reversed index order, the conditional law of each increment
// given the already-fixed future, and advances the hidden state once an atom
// is realized.
class ConditionalLawSource {
  public:
    virtual ~ConditionalLawSource() = default;
    virtual std::size_t horizon() const = 0;
    virtual ConditionalLaw law(std::size_t ell) = 0;
    virtual void realize(std::size_t ell, const ConditionalLaw& law, int atom_idx,
                         RandomStream& rng) = 0;
    virtual double var_target(std::size_t ell) const = 0;
};

// Reverse MDS of a map observable: the state is the future value T^ell; each
// realized atom reveals T^{ell-1} (exactly for an enumerated preimage, by an
// exact in-block index draw for an aggregated far branch of the Gauss map).
class MapMdsSource final : public ConditionalLawSource {
  public:
    MapMdsSource(MFunctionPtr mfun, std::size_t n, double future_seed_state)
        : mfun_(std::move(mfun)), n_(n), v_(future_seed_state) {
        states_rev_.reserve(n + 1);
        states_rev_.push_back(v_);
    }

    MapMdsSource(std::shared_ptr<const BlockScheme> blocks, std::size_t n,
                 double future_seed_state)
        : blocks_(std::move(blocks)), n_(n), v_(future_seed_state) {
        states_rev_.reserve(n + 1);
        states_rev_.push_back(v_);
    }

    std::size_t horizon() const override { return n_; }

    ConditionalLaw law(std::size_t ell) override { return kernel(ell).conditional_law(v_); }

    void realize(std::size_t, const ConditionalLaw& law, int atom_idx,
                 RandomStream& rng) override {
        const LawAtom& atom = law.atoms.at(static_cast<std::size_t>(atom_idx));
        if (atom.block >= 0) {
            const auto* gauss = dynamic_cast<const GaussMap*>(&map());
            if (gauss == nullptr) throw NumericError("aggregated preimage on a finite-branch map");
            v_ = gauss->sample_preimage_in_block(
                v_, law.blocks.at(static_cast<std::size_t>(atom.block)), rng.uniform_pos());
        } else {
            v_ = atom.state;
        }
        states_rev_.push_back(v_);
    }

    double var_target(std::size_t ell) const override {
        return blocks_ ? blocks_->level_for_index(ell).var_target : mfun_->mds_variance();
    }

    // T^0..T^n, available once all increments are realized.
    std::vector<double> orbit() const {
        return {states_rev_.rbegin(), states_rev_.rend()};
    }

    const IntervalMap& map() const { return kernel(1).op().map(); }

  private:
    const MFunction& kernel(std::size_t ell) const {
        return blocks_ ? *blocks_->level_for_index(ell).mfun : *mfun_;
    }

    MFunctionPtr mfun_;
    std::shared_ptr<const BlockScheme> blocks_;
    std::size_t n_;
    double v_;
    std::vector<double> states_rev_;
};

struct CouplingOptions {
    double dt_div = 400.0;
    double fixed_dt = 0.0;   // > 0 pins the step instead of variance/dt_div
    double sigma_iid = 0.0;  // > 0 requests the iid N(0, sigma^2) partner
};

struct CouplingTrace {
    std::vector<double> increments;    // X_l (map order)
    std::vector<double> gaussian;      // Z_l with Var = E(X_l^2)
    std::vector<double> gaussian_iid;  // rescaled per-level to N(0, sigma^2)
    std::vector<double> stop_times;    // embedded clock consumed per increment
    std::vector<double> var_targets;
    std::vector<double> orbit;  // filled for map sources
    double total_clock = 0.0;
};

// Couples the increment stream to a Brownian path: increments are embedded in
// reversed index order (the future of each one is already fixed), and the
// Gaussian partners are the same path's increments over the deterministic
// variance times W_l = sum_{i=l..n} E(X_i^2), read through the embedded clock.
inline CouplingTrace couple(ConditionalLawSource& source, RandomStream rng,
                            const CouplingOptions& opts = {}) {
    const std::size_t n = source.horizon();
    CouplingTrace trace;
    trace.increments.assign(n, 0.0);
    trace.gaussian.assign(n, 0.0);
    trace.stop_times.assign(n, 0.0);
    trace.var_targets.assign(n, 0.0);

    double min_var = 0.0;
    for (std::size_t ell = 1; ell <= n; ++ell) {
        const double v = source.var_target(ell);
        trace.var_targets[ell - 1] = v;
        if (v > 0.0 && (min_var == 0.0 || v < min_var)) min_var = v;
    }
    // W in processing order: det_times[p] = sum of var targets of the first
    // p+1 processed indices (ell = n down).
    std::vector<double> det_times(n, 0.0);
    {
        double cum = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            cum += trace.var_targets[n - 1 - p];
            det_times[p] = cum;
        }
    }
    DetRecorder rec(det_times);
    BrownianGrid path(std::move(rng));

    for (std::size_t ell = n; ell >= 1; --ell) {
        const ConditionalLaw law = source.law(ell);
        if (law.variance > 0.0) {
            const EmbedResult res =
                embed_increment(path, law.atoms, opts.dt_div, opts.fixed_dt, &rec);
            trace.increments[ell - 1] = res.value;
            trace.stop_times[ell - 1] = res.stop_time;
            source.realize(ell, law, res.atom_index, path.rng());
        } else {
            int pick = 0;
            double u = path.rng().uniform(), acc = 0.0;
            for (std::size_t i = 0; i < law.atoms.size(); ++i) {
                acc += law.atoms[i].weight;
                if (u < acc || i + 1 == law.atoms.size()) {
                    pick = static_cast<int>(i);
                    break;
                }
            }
            source.realize(ell, law, pick, path.rng());
        }
    }
    if (!rec.done() && min_var > 0.0) {
        const double dt = opts.fixed_dt > 0.0 ? opts.fixed_dt : min_var / opts.dt_div;
        path.advance_past(det_times.back() + dt, dt, &rec);
    }
    trace.total_clock = path.t();

    const auto& bv = rec.values();
    for (std::size_t ell = 1; ell <= n; ++ell) {
        const std::size_t p = n - ell;  // index of W_ell in processing order
        const double b_hi = bv[p];
        const double b_lo = p == 0 ? 0.0 : bv[p - 1];
        trace.gaussian[ell - 1] = b_hi - b_lo;
    }
    if (opts.sigma_iid > 0.0) {
        trace.gaussian_iid.assign(n, 0.0);
        for (std::size_t ell = 1; ell <= n; ++ell) {
            const double v = trace.var_targets[ell - 1];
            trace.gaussian_iid[ell - 1] = v > 0.0
                ? trace.gaussian[ell - 1] * opts.sigma_iid / std::sqrt(v)
                : opts.sigma_iid * path.rng().normal();
        }
    }
    return trace;
}

// Tail-series variant: embeds the normalized increments xi_l = X_l / sigma_l^2
// and reports |R_m - B_{delta_m^2}| against the envelope
// sqrt(alpha_m (|log(delta_m^2/alpha_m)| + log log(1/alpha_m))).
struct TailCheckpoint {
    std::size_t m = 0;
    double r_m = 0.0;
    double b_at_delta2 = 0.0;
    double err = 0.0;
    double envelope = 0.0;
    double ratio = 0.0;
    double delta2 = 0.0;
    double alpha = 0.0;
};

struct TailSeriesReport {
    std::vector<TailCheckpoint> rows;
};

inline TailSeriesReport tail_series_couple(ConditionalLawSource& source, double p,
                                           std::vector<std::size_t> checkpoints,
                                           RandomStream rng, const CouplingOptions& opts = {}) {
    const std::size_t n = source.horizon();
    std::sort(checkpoints.begin(), checkpoints.end());
    std::vector<double> var(n + 1, 0.0), sig2(n + 1, 0.0);
    for (std::size_t ell = 1; ell <= n; ++ell) {
        var[ell] = source.var_target(ell);
        sig2[ell] = sig2[ell - 1] + var[ell];
    }
    std::vector<double> delta2(n + 2, 0.0);
    for (std::size_t ell = n; ell >= 1; --ell)
        delta2[ell] = delta2[ell + 1] + (sig2[ell] > 0.0 ? var[ell] / sqr(sig2[ell]) : 0.0);

    // recorder times: delta2 at checkpoints, ascending = descending m
    std::vector<double> det_times;
    for (auto it = checkpoints.rbegin(); it != checkpoints.rend(); ++it)
        det_times.push_back(delta2[*it]);
    DetRecorder rec(det_times);
    BrownianGrid path(std::move(rng));

    std::vector<double> r_at(checkpoints.size(), 0.0);
    for (std::size_t ell = n; ell >= 1; --ell) {
        const double s2 = sig2[ell];
        if (var[ell] > 0.0 && s2 > 0.0) {
            ConditionalLaw law = source.law(ell);
            const double scale = 1.0 / s2;
            for (auto& a : law.atoms) a.value *= scale;
            const EmbedResult res =
                embed_increment(path, law.atoms, opts.dt_div, opts.fixed_dt, &rec);
            source.realize(ell, law, res.atom_index, path.rng());
        } else {
            ConditionalLaw law = source.law(ell);
            source.realize(ell, law, 0, path.rng());
        }
        for (std::size_t c = 0; c < checkpoints.size(); ++c)
            if (checkpoints[c] == ell) r_at[c] = path.b();
    }
    if (!rec.done()) {
        double max_dt = 0.0;
        for (std::size_t ell = 1; ell <= n; ++ell)
            if (sig2[ell] > 0.0)
                max_dt = std::max(max_dt, var[ell] / sqr(sig2[ell]));
        const double dt = opts.fixed_dt > 0.0 ? opts.fixed_dt : std::max(max_dt, 1e-12) / opts.dt_div;
        path.advance_past(det_times.empty() ? 0.0 : det_times.back() + dt, dt, &rec);
    }

    TailSeriesReport rep;
    const auto& bv = rec.values();
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        TailCheckpoint row;
        row.m = checkpoints[c];
        row.r_m = r_at[c];
        row.delta2 = delta2[row.m];
        // recorder stored descending m
        row.b_at_delta2 = bv[checkpoints.size() - 1 - c];
        row.err = std::fabs(row.r_m - row.b_at_delta2);
        const double mm = static_cast<double>(std::max<std::size_t>(row.m, 3));
        const double a_m = std::pow(mm, 2.0 / p) * std::pow(std::log(mm), 1.0 - 4.0 / p);
        const double s4 = sqr(sig2[row.m]);
        row.alpha = s4 > 0.0 ? a_m / s4 : 0.0;
        if (row.alpha > 0.0 && row.delta2 > 0.0) {
            row.envelope = std::sqrt(row.alpha * (std::fabs(std::log(row.delta2 / row.alpha)) +
                                                  loglog_safe(1.0 / row.alpha)));
            row.ratio = row.envelope > 0.0 ? row.err / row.envelope : 0.0;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

// Sup over t <= T, s <= a of |B_{t+s}-B_t| / sqrt(2a[log((t+a)/a)+loglog a]),
// computed on a unit-step path (the ratio is evaluated in step units since
// its normalization is not scale-invariant).
struct HansonRussoReport {
    double sup_ratio = 0.0;
    std::size_t window = 0;
    std::size_t steps = 0;
};

inline HansonRussoReport hanson_russo_check(RandomStream rng, std::size_t a_steps,
                                            std::size_t t_steps) {
    if (a_steps < 100) throw ConfigError("hanson_russo_check: window must be >= 100 steps");
    if (t_steps < 10 * a_steps) throw ConfigError("hanson_russo_check: horizon must be >= 10 windows");
    std::vector<double> b = BrownianGrid::materialize(rng, t_steps);
    HansonRussoReport rep;
    rep.window = a_steps;
    rep.steps = t_steps;
    const double a = static_cast<double>(a_steps);
    std::vector<std::size_t> qmax, qmin;  // monotone deques of indices
    std::size_t hmax = 0, hmin = 0;
    const double lla = std::log(std::log(a));
    for (std::size_t t = 0; t + a_steps <= t_steps; ++t) {
        // maintain window (t, t+a]
        const std::size_t right = t + a_steps;
        for (std::size_t s = (t == 0 ? 1 : right); s <= right; ++s) {
            while (qmax.size() > hmax && b[qmax.back()] <= b[s]) qmax.pop_back();
            qmax.push_back(s);
            while (qmin.size() > hmin && b[qmin.back()] >= b[s]) qmin.pop_back();
            qmin.push_back(s);
        }
        while (qmax[hmax] <= t) ++hmax;
        while (qmin[hmin] <= t) ++hmin;
        const double dev = std::max(b[qmax[hmax]] - b[t], b[t] - b[qmin[hmin]]);
        const double tt = static_cast<double>(t);
        const double denom = std::sqrt(2.0 * a * (std::log((tt + a) / a) + lla));
        rep.sup_ratio = std::max(rep.sup_ratio, dev / denom);
    }
    return rep;
}

}  // namespace asiplab
