#pragma once

#include <cmath>
#include <vector>

#include "asiplab/common.hpp"
#include "asiplab/martingale.hpp"
#include "asiplab/rng.hpp"

namespace asiplab {

// Collects B at a sorted list of deterministic times as the path advances,
// interpolating linearly inside a step segment.
class DetRecorder {
  public:
    explicit DetRecorder(std::vector<double> times) : times_(std::move(times)) {
        values_.resize(times_.size());
    }

    void observe(double t0, double b0, double t1, double b1) {
        while (next_ < times_.size() && times_[next_] <= t1 + 1e-300) {
            const double tt = times_[next_];
            if (t1 > t0) {
                const double w = std::min(1.0, std::max(0.0, (tt - t0) / (t1 - t0)));
                values_[next_] = b0 + w * (b1 - b0);
            } else {
                values_[next_] = b1;
            }
            ++next_;
        }
    }

    bool done() const { return next_ >= times_.size(); }
    double pending_time() const { return done() ? 0.0 : times_[next_]; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::vector<double> times_;
    std::vector<double> values_;
    std::size_t next_ = 0;
};

struct ExitResult {
    double elapsed = 0.0;
    bool upper = false;
};

// Brownian path on a uniform step grid, generated on demand. Bracket exits
// detect direct sign changes with linear time interpolation and additionally
// sample the in-step Brownian-bridge crossing probability, which removes the
// O(sqrt(dt)) barrier bias of plain sign-change detection.
class BrownianGrid {
  public:
    explicit BrownianGrid(RandomStream rng) : rng_(std::move(rng)) {}

    double t() const { return t_; }
    double b() const { return b_; }
    RandomStream& rng() { return rng_; }

    void step(double dt, DetRecorder* rec) {
        const double bn = b_ + std::sqrt(dt) * rng_.normal();
        const double tn = t_ + dt;
        if (rec) rec->observe(t_, b_, tn, bn);
        t_ = tn;
        b_ = bn;
    }

    // Run until first exit from (lo, hi); leaves the state exactly on the
    // barrier at the (interpolated) crossing time.
    ExitResult run_exit(double lo, double hi, double dt, DetRecorder* rec) {
        const double t_start = t_;
        if (b_ >= hi) return settle(hi, true, t_start);
        if (b_ <= lo) return settle(lo, false, t_start);
        const double sdt = std::sqrt(dt);
        for (;;) {
            const double bn = b_ + sdt * rng_.normal();
            if (bn >= hi || bn <= lo) {
                const bool upper = bn >= hi;
                const double barrier = upper ? hi : lo;
                const double frac = (barrier - b_) / (bn - b_);
                const double tx = t_ + frac * dt;
                if (rec) rec->observe(t_, b_, tx, barrier);
                t_ = tx;
                b_ = barrier;
                return {t_ - t_start, upper};
            }
            // Bridge crossing test; probabilities are negligible unless the
            // segment runs close to a barrier.
            double ph = 0.0, pl = 0.0;
            const double dh = (hi - b_) * (hi - bn);
            if (dh < 10.0 * dt) ph = std::exp(-2.0 * dh / dt);
            const double dl = (b_ - lo) * (bn - lo);
            if (dl < 10.0 * dt) pl = std::exp(-2.0 * dl / dt);
            if (ph > 0.0 || pl > 0.0) {
                const double u = rng_.uniform();
                if (u < ph || u < ph + pl) {
                    const bool upper = u < ph;
                    const double barrier = upper ? hi : lo;
                    const double tx = t_ + 0.5 * dt;
                    if (rec) rec->observe(t_, b_, tx, barrier);
                    t_ = tx;
                    b_ = barrier;
                    return {t_ - t_start, upper};
                }
            }
            const double tn = t_ + dt;
            if (rec) rec->observe(t_, b_, tn, bn);
            t_ = tn;
            b_ = bn;
        }
    }

    void advance_past(double t_target, double dt, DetRecorder* rec) {
        while (t_ < t_target) step(dt, rec);
    }

    // Materialized unit-step path for diagnostics (values at 0..steps).
    static std::vector<double> materialize(RandomStream& rng, std::size_t steps) {
        std::vector<double> b(steps + 1, 0.0);
        for (std::size_t i = 1; i <= steps; ++i) b[i] = b[i - 1] + rng.normal();
        return b;
    }

  private:
    ExitResult settle(double barrier, bool upper, double t_start) {
        b_ = barrier;
        return {t_ - t_start, upper};
    }

    RandomStream rng_;
    double t_ = 0.0;
    double b_ = 0.0;
};

struct EmbedResult {
    double stop_time = 0.0;
    double value = 0.0;
    int atom_index = -1;
};

// Skorohod step: realizes one finitely supported centered law as a sequence
// of two-point Brownian exits (binary splitting at the weighted median; the
// split tree is deterministic per law). The exit lands exactly on an atom of
// the support. dt per split defaults to (split conditional variance)/dt_div;
// fixed_dt > 0 pins the grid instead.
inline EmbedResult embed_increment(BrownianGrid& path, const std::vector<LawAtom>& law,
                                   double dt_div = 400.0, double fixed_dt = 0.0,
                                   DetRecorder* rec = nullptr) {
    if (law.empty()) throw ConfigError("embed_increment: empty law");
    double mean = 0.0, scale = 0.0;
    for (const auto& a : law) {
        if (a.weight < 0.0) throw ConfigError("embed_increment: negative weight");
        mean += a.weight * a.value;
        scale = std::max(scale, std::fabs(a.value));
    }
    if (std::fabs(mean) > 1e-10 * std::max(1.0, scale))
        throw ConfigError("embed_increment: law is not centered");

    std::vector<int> order(law.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return law[a].value < law[b].value; });

    const double t0 = path.t();
    const double base = path.b();
    std::size_t lo = 0, hi = order.size();  // active group [lo, hi)
    for (;;) {
        const double vmin = law[order[lo]].value, vmax = law[order[hi - 1]].value;
        if (hi - lo == 1 || vmax - vmin <= 1e-14 * (1.0 + std::fabs(vmax))) {
            std::size_t pick = lo;
            if (hi - lo > 1) {
                double wtot = 0.0;
                for (std::size_t i = lo; i < hi; ++i) wtot += law[order[i]].weight;
                double u = path.rng().uniform() * wtot, acc = 0.0;
                for (std::size_t i = lo; i < hi; ++i) {
                    acc += law[order[i]].weight;
                    if (u < acc || i + 1 == hi) {
                        pick = i;
                        break;
                    }
                }
            }
            const int idx = order[pick];
            // land exactly on the realized atom
            return {path.t() - t0, law[idx].value, idx};
        }

        double wtot = 0.0;
        for (std::size_t i = lo; i < hi; ++i) wtot += law[order[i]].weight;
        double acc = 0.0;
        std::size_t split = lo + 1;
        for (std::size_t i = lo; i + 1 < hi; ++i) {
            acc += law[order[i]].weight;
            split = i + 1;
            if (acc >= 0.5 * wtot) break;
        }
        double wl = 0.0, ml = 0.0, wr = 0.0, mr = 0.0;
        for (std::size_t i = lo; i < split; ++i) {
            wl += law[order[i]].weight;
            ml += law[order[i]].weight * law[order[i]].value;
        }
        for (std::size_t i = split; i < hi; ++i) {
            wr += law[order[i]].weight;
            mr += law[order[i]].weight * law[order[i]].value;
        }
        const double mu_l = base + ml / wl;
        const double mu_r = base + mr / wr;
        const double ab = (path.b() - mu_l) * (mu_r - path.b());
        const double dt = fixed_dt > 0.0 ? fixed_dt : std::max(ab, 1e-30) / dt_div;
        const ExitResult exit = path.run_exit(mu_l, mu_r, dt, rec);
        if (exit.upper)
            lo = split;
        else
            hi = split;
    }
}

}  // namespace asiplab
