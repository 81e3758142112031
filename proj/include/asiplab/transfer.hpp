#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "asiplab/grid.hpp"
#include "asiplab/maps.hpp"
#include "asiplab/observables.hpp"

namespace asiplab {

enum class Norm { Inf, L2, L4 };

inline const char* norm_name(Norm n) {
    switch (n) {
        case Norm::Inf: return "inf";
        case Norm::L2: return "2";
        default: return "4";
    }
}

struct DecayReport {
    std::vector<double> norms;  // ||K^n f - nu(f)||, n = 1..N
    double rho_hat = 0.0;
    double fit_residual = 0.0;
    bool degenerate = false;  // all norms at the floating-point floor
};

// Summability verdict for a positive term sequence (partial sums + the
// last-vs-first divergence flag; geometric fit as in fit_decay).
struct SeriesVerdict {
    double partial_sum = 0.0;
    bool summable = true;
    double rho_hat = 0.0;
    bool geometric = false;
};

inline SeriesVerdict classify_series(const std::vector<double>& terms) {
    SeriesVerdict v;
    Accumulator acc;
    double first = 0.0, last = 0.0;
    bool seen = false;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        acc.add(terms[i]);
        if (terms[i] > 1e-300) {
            if (!seen) { first = terms[i]; seen = true; }
            last = terms[i];
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(terms[i]));
        }
    }
    v.partial_sum = acc.value();
    v.summable = !seen || last <= first;
    if (xs.size() >= 3) {
        LineFit fit = fit_line(xs, ys);
        v.rho_hat = std::exp(fit.slope);
        v.geometric = v.rho_hat < 1.0 && fit.rms_residual < 1.5;
    }
    if (v.partial_sum < 1e-12) {
        v.summable = true;
        v.geometric = true;  // vacuously: every term sits at the numerical floor
    }
    return v;
}

struct MomentConditionReport {
    std::vector<double> norms1, norms2;  // raw norms entering the summands, n = 2..N
    std::vector<double> terms1, terms2;  // summands, n = 2..N
    SeriesVerdict series1, series2;
    double gamma = 0.0;
    int gap_scan = 0;
};

struct ContractionReport {
    std::vector<double> part1, part2;  // dictionary maxima at i = 1..N
    double c1 = 0.0, rho1 = 0.0;
    double c2 = 0.0, rho2 = 0.0;
    int dict_size = 0, j_scan = 0;
};

// Transfer operator K of the backward chain in branch-sum form:
//   K f(y) = sum_i f(s_i(y)) h(s_i(y)) |s_i'(y)| / h(y),
// acting on midpoint-grid functions. Immutable after construction.
class AnalyticTransfer {
  public:
    explicit AnalyticTransfer(MapPtr map, std::size_t cells = std::size_t{1} << 16)
        : map_(std::move(map)), cells_(cells) {
        mass_.resize(cells_);
        const double h = 1.0 / static_cast<double>(cells_);
        for (std::size_t i = 0; i < cells_; ++i)
            mass_[i] = map_->nu_interval(i * h, (i + 1) * h);
        build_breakpoints();
        build_cache();
    }

    const IntervalMap& map() const { return *map_; }
    MapPtr map_ptr() const { return map_; }
    std::size_t cells() const { return cells_; }
    const std::vector<double>& cell_masses() const { return mass_; }

    double nu_grid(const GridFn& g) const {
        Accumulator a;
        for (std::size_t i = 0; i < cells_; ++i)
            if (!is_knot_cell_.empty() && is_knot_cell_[i]) {
                // jump inside the cell: integrate the piece reconstruction
                for (const auto& kc : knot_cells_)
                    if (kc.cell == i)
                        for (std::size_t p = 0; p < kc.sub_mass.size(); ++p)
                            a.add(kc.sub_mass[p] * g(0.5 * (kc.sub_lo[p] + kc.sub_hi[p])));
            } else {
                a.add(mass_[i] * g[i]);
            }
        return a.value();
    }

    template <typename F>
    double nu_fn(F&& f) const {
        Accumulator a;
        const double h = 1.0 / static_cast<double>(cells_);
        for (std::size_t i = 0; i < cells_; ++i) a.add(mass_[i] * f((i + 0.5) * h));
        return a.value();
    }

    GridFn sample(const std::function<double(double)>& f) const {
        GridFn g = GridFn::sample(cells_, f);
        attach_knots(g, [&](double x) { return f(x); });
        return g;
    }

    double apply_point(const std::function<double(double)>& f, double y) const {
        const PreimageSet set = map_->preimages(y);
        Accumulator a;
        for (const auto& p : set.atoms) a.add(f(p.x) * p.weight);
        for (const auto& b : set.blocks) {
            a.add(f(b.centroid) * b.mass);
            const double d = 1e-4;
            if (b.var > 0.0 && b.centroid > d) {
                const double curv =
                    (f(b.centroid + d) - 2.0 * f(b.centroid) + f(b.centroid - d)) / (d * d);
                a.add(0.5 * curv * b.var * b.mass);
            }
        }
        return a.value();
    }

    // One application of the grid function at an arbitrary point.
    double apply_grid_point(const GridFn& f, double y, bool pw_const = false) const {
        const PreimageSet set = map_->preimages(y);
        double s = 0.0;
        if (pw_const) {
            for (const auto& p : set.atoms) s += f.nearest(p.x) * p.weight;
            for (const auto& b : set.blocks) s += f.nearest(b.centroid) * b.mass;
        } else {
            for (const auto& p : set.atoms) s += f(p.x) * p.weight;
            for (const auto& b : set.blocks)
                s += (f(b.centroid) + 0.5 * f.curvature(b.centroid) * b.var) * b.mass;
        }
        return s;
    }

    // One application on the grid. pw_const selects nearest-cell evaluation
    // (indicator-type data); default is linear interpolation.
    GridFn apply(const GridFn& f, bool pw_const = false) const {
        GridFn out(cells_);
        const double h = 1.0 / static_cast<double>(cells_);
        for (std::size_t i = 0; i < cells_; ++i) {
            double s = 0.0;
            if (cached_) {
                const std::size_t lo = offsets_[i], hi = offsets_[i + 1];
                if (pw_const) {
                    for (std::size_t e = lo; e < hi; ++e) s += f.nearest(node_x_[e]) * node_w_[e];
                } else {
                    for (std::size_t e = lo; e < hi; ++e) {
                        s += f(node_x_[e]) * node_w_[e];
                        if (node_var_[e] > 0.0)
                            s += 0.5 * f.curvature(node_x_[e]) * node_var_[e] * node_w_[e];
                    }
                }
            } else {
                s = apply_grid_point(f, (i + 0.5) * h, pw_const);
            }
            out[i] = s;
        }
        if (!pw_const && !brk_.empty())
            attach_knots(out, [&](double y) { return apply_grid_point(f, y); });
        return out;
    }

    GridFn power_apply(GridFn f, std::size_t n, bool pw_const = false) const {
        for (std::size_t k = 0; k < n; ++k) f = apply(f, pw_const);
        return f;
    }

    GridFn power_apply(const std::function<double(double)>& f, std::size_t n,
                       bool pw_const = false) const {
        return power_apply(sample(f), n, pw_const);
    }

    double norm(const GridFn& g, Norm which) const {
        switch (which) {
            case Norm::Inf: return g.max_abs();
            case Norm::L2: {
                Accumulator a;
                for (std::size_t i = 0; i < cells_; ++i) a.add(mass_[i] * sqr(g[i]));
                return std::sqrt(a.value());
            }
            default: {
                Accumulator a;
                for (std::size_t i = 0; i < cells_; ++i) a.add(mass_[i] * sqr(sqr(g[i])));
                return std::pow(a.value(), 0.25);
            }
        }
    }

    GridFn centered(const GridFn& g) const {
        GridFn out = g;
        const double m = nu_grid(g);
        for (std::size_t i = 0; i < cells_; ++i) out[i] -= m;
        for (double& v : out.knot_left()) v -= m;
        for (double& v : out.knot_right()) v -= m;
        return out;
    }

    // ||K^n f - nu(f)|| for n = 1..N and the fitted geometric rate over
    // n in [2, N]; values at the floating-point floor are dropped.
    DecayReport fit_decay(const std::function<double(double)>& f, Norm which, int N,
                          bool pw_const = false) const {
        DecayReport rep;
        GridFn g = centered(sample(f));
        std::vector<double> xs, ys;
        double floor = 1e-13;
        for (int n = 1; n <= N; ++n) {
            g = apply(g, pw_const);
            const double nn = norm(g, which);
            rep.norms.push_back(nn);
            if (n == 1) floor = std::max(floor, 3e-8 * nn);  // grid discretization floor
            if (n >= 2 && nn > floor) {
                xs.push_back(n);
                ys.push_back(std::log(nn));
            }
        }
        if (xs.size() < 2) {
            rep.degenerate = true;
            return rep;
        }
        LineFit fit = fit_line(xs, ys);
        rep.rho_hat = std::exp(fit.slope);
        rep.fit_residual = fit.rms_residual;
        return rep;
    }

    // Summability checkers for the fourth-moment rate conditions. The double
    // sup in the second series is approximated by fixing j = n and scanning
    // the gap i - j; the report labels this a scan, not a proof.
    MomentConditionReport check_moment_conditions(const Observable& f, double gamma, int N, int gap_scan = 16) const {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("check_moment_conditions: gamma must lie in (0,1]");
        if (N < 16) throw ConfigError("check_moment_conditions: N must be >= 16");
        if (!f.bounded) require_finite_fourth_moment(f);
        MomentConditionReport rep;
        rep.gamma = gamma;
        rep.gap_scan = gap_scan;

        GridFn base = sample(f.eval);
        {
            GridFn g = centered(base);
            std::vector<double> n4;
            for (int n = 1; n <= N; ++n) {
                g = apply(g);
                n4.push_back(norm(g, Norm::L4));
            }
            for (int n = 2; n <= N; ++n) {
                rep.norms1.push_back(n4[n - 1]);
                rep.terms1.push_back(std::pow(std::log(static_cast<double>(n)), 3.0) *
                                     std::pow(static_cast<double>(n), 1.0 / gamma + 0.5) *
                                     sqr(n4[n - 1]));
            }
        }
        {
            std::vector<std::vector<double>> n2_by_gap;
            GridFn kgf = base;
            for (int g = 0; g <= gap_scan; ++g) {
                if (g > 0) kgf = apply(kgf);
                GridFn prod(cells_);
                for (std::size_t i = 0; i < cells_; ++i) prod[i] = base[i] * kgf[i];
                GridFn w = centered(prod);
                std::vector<double> norms;
                for (int n = 1; n <= N; ++n) {
                    w = apply(w);
                    norms.push_back(norm(w, Norm::L2));
                }
                n2_by_gap.push_back(std::move(norms));
            }
            for (int n = 2; n <= N; ++n) {
                double sup = 0.0;
                for (const auto& norms : n2_by_gap) sup = std::max(sup, norms[n - 1]);
                rep.norms2.push_back(sup);
                rep.terms2.push_back(std::pow(std::log(static_cast<double>(n)), 3.0) *
                                     std::pow(static_cast<double>(n), 2.0 * gamma) * sqr(sup));
            }
        }
        rep.series1 = classify_series(rep.terms1);
        rep.series2 = classify_series(rep.terms2);
        return rep;
    }

    // Lipschitz-class contraction check: the sup over the 1-Lipschitz ball is
    // replaced by a hinge dictionary (a lower bound, dictionary size recorded).
    ContractionReport check_lipschitz_contraction(int N, int dict_size, int j_scan = 8) const {
        if (dict_size < 8) throw ConfigError("check_lipschitz_contraction: dict_size must be >= 8");
        ContractionReport rep;
        rep.dict_size = dict_size;
        rep.j_scan = j_scan;
        rep.part1.assign(N, 0.0);
        rep.part2.assign(N, 0.0);

        std::vector<std::function<double(double)>> dict;
        for (int k = 0; k < dict_size; ++k) {
            const double t = (k + 0.5) / dict_size;
            dict.push_back([t](double x) { return std::fabs(x - t); });
        }
        dict.push_back([](double x) { return x; });
        for (const auto& g : dict) {
            GridFn w = centered(sample(g));
            for (int i = 1; i <= N; ++i) {
                w = apply(w);
                rep.part1[i - 1] = std::max(rep.part1[i - 1], norm(w, Norm::Inf));
            }
        }

        const int ks = std::min(dict_size, 8);
        std::vector<GridFn> kj_hinges;  // K^j |.-t| for each knot t and j <= j_scan
        for (int kt = 0; kt < ks; ++kt) {
            const double t = (kt + 0.5) / ks;
            GridFn g = sample([t](double x) { return std::fabs(x - t); });
            for (int j = 0; j <= j_scan; ++j) {
                if (j > 0) g = apply(g);
                kj_hinges.push_back(g);
            }
        }
        for (int kskn = 0; kskn < ks; ++kskn) {
            const double s = (kskn + 0.5) / ks;
            GridFn hinge_s = sample([s](double x) { return std::fabs(x - s); });
            for (int kt = 0; kt < ks; ++kt) {
                for (int j = 0; j <= j_scan; ++j) {
                    const GridFn& kj = kj_hinges[kt * (j_scan + 1) + j];
                    GridFn q(cells_);
                    for (std::size_t i = 0; i < cells_; ++i) q[i] = 0.5 * (hinge_s[i] + kj[i]);
                    GridFn w = centered(q);
                    for (int i = 1; i <= N; ++i) {
                        w = apply(w);
                        rep.part2[i - 1] = std::max(rep.part2[i - 1], norm(w, Norm::Inf));
                    }
                }
            }
        }

        auto fit_part = [](const std::vector<double>& vals, double& c, double& rho) {
            std::vector<double> xs, ys;
            for (std::size_t i = 0; i < vals.size(); ++i)
                if (vals[i] > 1e-13) {
                    xs.push_back(static_cast<double>(i + 1));
                    ys.push_back(std::log(vals[i]));
                }
            LineFit fit = fit_line(xs, ys);
            c = std::exp(fit.intercept);
            rho = std::exp(fit.slope);
        };
        fit_part(rep.part1, rep.c1, rep.rho1);
        fit_part(rep.part2, rep.c2, rep.rho2);
        return rep;
    }

  private:
    // Interior jump points of the invariant density. The transfer iterates of
    // smooth data jump exactly on this (forward-closed) set.
    void build_breakpoints() {
        std::vector<double> raw = map_->density_breakpoints();
        std::sort(raw.begin(), raw.end());
        for (double b : raw) {
            if (b <= 1e-9 || b >= 1.0 - 1e-9) continue;
            if (!brk_.empty() && b - brk_.back() < 1e-9) continue;
            brk_.push_back(b);
        }
        if (brk_.empty()) return;
        is_knot_cell_.assign(cells_, 0);
        const double h = 1.0 / static_cast<double>(cells_);
        std::size_t start = 0;
        while (start < brk_.size()) {
            const auto cell = static_cast<std::size_t>(
                std::min(brk_[start] / h, static_cast<double>(cells_ - 1)));
            std::size_t stop = start;
            while (stop < brk_.size() &&
                   static_cast<std::size_t>(std::min(brk_[stop] / h, static_cast<double>(cells_ - 1))) == cell)
                ++stop;
            KnotCell kc;
            kc.cell = cell;
            double lo = cell * h;
            for (std::size_t k = start; k <= stop; ++k) {
                const double hi = k < stop ? brk_[k] : (cell + 1) * h;
                if (hi > lo) {
                    kc.sub_lo.push_back(lo);
                    kc.sub_hi.push_back(hi);
                    kc.sub_mass.push_back(map_->nu_interval(lo, hi));
                }
                lo = hi;
            }
            is_knot_cell_[cell] = 1;
            knot_cells_.push_back(std::move(kc));
            start = stop;
        }
    }

    // One-sided values at the density breakpoints via evaluation just off the
    // jump (the breakpoints are isolated well beyond 1e-12).
    template <typename Eval>
    void attach_knots(GridFn& g, Eval&& eval) const {
        if (brk_.empty()) return;
        constexpr double kSide = 1e-12;
        std::vector<double> left(brk_.size()), right(brk_.size());
        for (std::size_t k = 0; k < brk_.size(); ++k) {
            left[k] = eval(brk_[k] - kSide);
            right[k] = eval(brk_[k] + kSide);
        }
        g.set_knots(brk_, std::move(left), std::move(right));
    }

    void build_cache() {
        const PreimageSet probe = map_->preimages(0.5);
        const std::size_t per_point = probe.atoms.size() + probe.blocks.size();
        if (per_point * cells_ > (std::size_t{1} << 22)) {
            cached_ = false;  // keep memory bounded; apply recomputes per point
            return;
        }
        offsets_.assign(cells_ + 1, 0);
        const double h = 1.0 / static_cast<double>(cells_);
        for (std::size_t i = 0; i < cells_; ++i) {
            const PreimageSet set = map_->preimages((i + 0.5) * h);
            for (const auto& p : set.atoms) {
                node_x_.push_back(p.x);
                node_w_.push_back(p.weight);
                node_var_.push_back(0.0);
            }
            for (const auto& b : set.blocks) {
                node_x_.push_back(b.centroid);
                node_w_.push_back(b.mass);
                node_var_.push_back(b.var);
            }
            offsets_[i + 1] = node_x_.size();
        }
        cached_ = true;
    }

    void require_finite_fourth_moment(const Observable& f) const {
        // Octave sums toward the origin grow when nu(f^4) diverges.
        auto integrand = [&](double x) { return sqr(sqr(f.eval(x))) * map_->density(x); };
        double prev = gl16(integrand, 1.0 / 512.0, 1.0 / 256.0);
        double cur = gl16(integrand, 1.0 / 2048.0, 1.0 / 1024.0);
        if (cur > prev) throw NumericError("check_moment_conditions: nu(f^4) appears divergent");
    }

    struct KnotCell {
        std::size_t cell = 0;
        std::vector<double> sub_lo, sub_hi, sub_mass;
    };

    MapPtr map_;
    std::size_t cells_;
    std::vector<double> mass_;
    std::vector<double> brk_;
    std::vector<char> is_knot_cell_;
    std::vector<KnotCell> knot_cells_;
    bool cached_ = false;
    std::vector<std::size_t> offsets_;
    std::vector<double> node_x_, node_w_, node_var_;
};

using TransferPtr = std::shared_ptr<const AnalyticTransfer>;

}  // namespace asiplab
