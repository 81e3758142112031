#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "asiplab/observables.hpp"
#include "asiplab/rng.hpp"
#include "asiplab/transfer.hpp"

namespace asiplab {

// One atom of the conditional law of an increment given the future value v:
// candidate previous state, probability weight, and the increment value.
struct LawAtom {
    double value;
    double weight;
    double state;       // preimage point (block centroid for aggregated far branches)
    int block = -1;     // index into the block list, -1 for an exact preimage
};

struct ConditionalLaw {
    std::vector<LawAtom> atoms;
    std::vector<TailBlock> blocks;      // gauss far-branch descriptors
    double raw_centering_defect = 0.0;  // sum w*value before the recentring shift
    double variance = 0.0;
};

// Two-argument kernel m(u,v) = sum_{j=0..J} (K^j f(u) - K^{j+1} f(v)),
// collapsed to f(u) + R(u) - R(v) - K^{J+1}f(v) with R = sum_{j=1..J} K^j f,
// so an evaluation costs two grid lookups. Gives the forward-chain MDS
// m(Y_l, Y_{l-1}) and the map-side reverse MDS m(T^{l-1}, T^l).
class MFunction {
  public:
    MFunction(TransferPtr op, Observable f, int j_cap = 64)
        : op_(std::move(op)), f_(std::move(f)) {
        GridFn g = op_->sample(f_.eval);
        nu_f_ = op_->nu_grid(g);

        DecayReport decay = op_->fit_decay(f_.eval, f_.bounded ? Norm::Inf : Norm::L2, 24);
        if (decay.degenerate) {
            j_max_ = 0;
            rho_ = 0.0;
            tail_bound_ = 0.0;
        } else {
            rho_ = decay.rho_hat;
            if (rho_ >= 1.0)
                throw NumericError("m-function: transfer norms do not decay (rho >= 1)");
            const double c0 = decay.norms[0] / rho_;
            j_max_ = j_cap;
            for (int j = 1; j <= j_cap; ++j)
                if (c0 * std::pow(rho_, j) < 1e-12) {
                    j_max_ = j;
                    break;
                }
            tail_bound_ = std::max(1e-15, c0 * std::pow(rho_, j_max_ + 1) * (1.0 + rho_) / (1.0 - rho_));
        }

        r_grid_ = GridFn(op_->cells(), 0.0);
        GridFn kg = g;
        std::vector<double> knot_l, knot_r;
        for (int j = 1; j <= j_max_; ++j) {
            kg = op_->apply(kg);
            for (std::size_t i = 0; i < op_->cells(); ++i) r_grid_[i] += kg[i];
            if (kg.has_knots()) {
                knot_l.resize(kg.knot_left().size(), 0.0);
                knot_r.resize(kg.knot_right().size(), 0.0);
                for (std::size_t k = 0; k < knot_l.size(); ++k) {
                    knot_l[k] += kg.knot_left()[k];
                    knot_r[k] += kg.knot_right()[k];
                }
            }
        }
        if (!knot_l.empty()) r_grid_.set_knots(kg.knot_x(), std::move(knot_l), std::move(knot_r));
        kj1_grid_ = op_->apply(kg);
        compute_mds_variance();
    }

    const AnalyticTransfer& op() const { return *op_; }
    const Observable& observable() const { return f_; }
    double nu_f() const { return nu_f_; }
    int j_max() const { return j_max_; }
    double rho() const { return rho_; }
    double tail_bound() const { return tail_bound_; }
    double centering_tol() const { return std::max(1e-8, 10.0 * tail_bound_); }
    double mds_variance() const { return mds_variance_; }

    double eval(double u, double v) const {
        return f_.eval(u) + r_grid_(u) - r_grid_(v) - kj1_grid_(v);
    }

    // E(X_ell | Y_0 = y) = K^ell f(y) - nu(f); diagnostic path, recomputed.
    double project(int ell, double y) const {
        if (ell < 0) throw ConfigError("project: lag must be >= 0");
        if (ell == 0) return f_.eval(y) - nu_f_;
        GridFn g = op_->power_apply(f_.eval, static_cast<std::size_t>(ell));
        return g(y) - nu_f_;
    }

    // r(y) = sum_{ell=1..J} (K^ell f(y) - nu(f)), truncated coboundary.
    double coboundary(double y) const { return r_grid_(y) - j_max_ * nu_f_; }

    // Conditional law of the increment given the future value v. The exact
    // telescoping mean is zero; the measured defect (series truncation plus
    // grid interpolation) is recorded and shifted out so downstream embedding
    // sees an exactly centered law.
    ConditionalLaw conditional_law(double v) const {
        ConditionalLaw law;
        const PreimageSet set = op_->map().preimages(v);
        const double bv = r_grid_(v) + kj1_grid_(v);
        law.atoms.reserve(set.atoms.size() + set.blocks.size());
        for (const auto& p : set.atoms)
            law.atoms.push_back({f_.eval(p.x) + r_grid_(p.x) - bv, p.weight, p.x, -1});
        for (std::size_t b = 0; b < set.blocks.size(); ++b) {
            const auto& blk = set.blocks[b];
            law.atoms.push_back({f_.eval(blk.centroid) + r_grid_(blk.centroid) - bv, blk.mass,
                                 blk.centroid, static_cast<int>(b)});
        }
        law.blocks = set.blocks;
        double defect = 0.0;
        for (const auto& a : law.atoms) defect += a.weight * a.value;
        law.raw_centering_defect = defect;
        double var = 0.0;
        for (auto& a : law.atoms) {
            a.value -= defect;
            var += a.weight * sqr(a.value);
        }
        law.variance = var;
        return law;
    }

  private:
    void compute_mds_variance() {
        Accumulator acc;
        const auto& mass = op_->cell_masses();
        const double h = 1.0 / static_cast<double>(op_->cells());
        for (std::size_t i = 0; i < op_->cells(); ++i) {
            const ConditionalLaw law = conditional_law((i + 0.5) * h);
            acc.add(mass[i] * law.variance);
        }
        mds_variance_ = acc.value();
    }

    TransferPtr op_;
    Observable f_;
    double nu_f_ = 0.0;
    int j_max_ = 0;
    double rho_ = 0.0;
    double tail_bound_ = 0.0;
    double mds_variance_ = 0.0;
    GridFn r_grid_, kj1_grid_;
};

using MFunctionPtr = std::shared_ptr<const MFunction>;

// Reverse martingale-difference stream along a forward orbit:
// d*_l = m(T^{l-1} x0, T^l x0), l = 1..n.
struct ReverseMDS {
    std::vector<double> orbit;       // T^0 .. T^n
    std::vector<double> increments;  // d*_1 .. d*_n
    MFunctionPtr mfun;
};

inline ReverseMDS reverse_mds_along(MFunctionPtr mfun, std::vector<double> orbit) {
    if (orbit.size() < 3) throw ConfigError("reverse_mds: n must be >= 2");
    ReverseMDS out;
    out.mfun = std::move(mfun);
    out.orbit = std::move(orbit);
    const std::size_t n = out.orbit.size() - 1;
    out.increments.resize(n);
    for (std::size_t l = 1; l <= n; ++l)
        out.increments[l - 1] = out.mfun->eval(out.orbit[l - 1], out.orbit[l]);
    return out;
}

inline ReverseMDS reverse_mds(MFunctionPtr mfun, std::size_t n, double x0) {
    if (n < 2) throw ConfigError("reverse_mds: n must be >= 2");
    const IntervalMap& map = mfun->op().map();
    return reverse_mds_along(mfun, iterate(map, x0, n + 1));
}

inline ReverseMDS reverse_mds(MFunctionPtr mfun, std::size_t n, RandomStream& rng) {
    if (n < 2) throw ConfigError("reverse_mds: n must be >= 2");
    const IntervalMap& map = mfun->op().map();
    return reverse_mds_along(mfun, sample_forward_orbit(map, n + 1, rng));
}

// Dyadic truncation scheme: level-j cutoff c(j) = 2^{j/p} j^{-2/p}, truncated
// observable g_j o f per monotone piece, one m-kernel per level.
struct BlockLevel {
    int j = 0;
    double cutoff = 0.0;
    Observable truncated;
    MFunctionPtr mfun;
    double var_target = 0.0;
};

inline double block_cutoff(double p, int j) {
    return std::pow(2.0, j / p) * std::pow(static_cast<double>(j), -2.0 / p);
}

// Index l -> dyadic level: l in {2^j+1, ..., 2^{j+1}} maps to j. Levels are
// clamped to j >= 1 (the formula's cutoff is vacuous at j = 0), which touches
// only l = 1, 2.
inline int block_level_of(std::size_t ell) {
    if (ell <= 2) return 1;
    int j = 0;
    std::size_t v = ell - 1;
    while (v >>= 1) ++j;
    return std::max(1, j);
}

class BlockScheme {
  public:
    BlockScheme(TransferPtr op, const Observable& f, double p, int levels_max)
        : p_(p), f_(f) {
        if (f.reg != RegClass::MonCombo)
            throw ConfigError("build_blocks: observable must carry a MonCombo tag");
        if (!(p > 2.0 && p <= 4.0)) throw ConfigError("build_blocks: p must lie in (2,4]");
        for (int j = 1; j <= levels_max; ++j) {
            BlockLevel lvl;
            lvl.j = j;
            lvl.cutoff = block_cutoff(p, j);
            lvl.truncated = truncate_observable(f, lvl.cutoff);
            lvl.mfun = std::make_shared<MFunction>(op, lvl.truncated);
            lvl.var_target = lvl.mfun->mds_variance();
            levels_.push_back(std::move(lvl));
        }
    }

    double p() const { return p_; }
    int levels_max() const { return static_cast<int>(levels_.size()); }
    const BlockLevel& level(int j) const { return levels_.at(static_cast<std::size_t>(j - 1)); }
    const BlockLevel& level_for_index(std::size_t ell) const {
        return level(std::min(block_level_of(ell), levels_max()));
    }
    const Observable& base_observable() const { return f_; }

    static Observable truncate_observable(const Observable& f, double cutoff) {
        Observable out = f;
        out.name = f.name + "_trunc";
        std::vector<MonPiece> pieces = f.pieces;
        auto gj = [cutoff](double x) { return std::fabs(x) <= cutoff ? x : 0.0; };
        out.eval = [pieces, gj](double x) {
            double s = 0.0;
            for (const auto& pc : pieces)
                if (x >= pc.lo && x <= pc.hi) s += pc.coeff * gj(pc.f(x));
            return s;
        };
        out.bounded = true;
        out.sup_abs = std::min(cutoff, f.bounded ? f.sup_abs : cutoff);
        return out;
    }

  private:
    double p_;
    Observable f_;
    std::vector<BlockLevel> levels_;
};

}  // namespace asiplab
