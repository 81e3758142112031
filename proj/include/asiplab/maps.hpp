#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "asiplab/common.hpp"
#include "asiplab/quadrature.hpp"

namespace asiplab {

// trigamma(x) = sum_{j>=0} 1/(x+j)^2, via recurrence + asymptotic series.
inline double trigamma(double x) {
    double acc = 0.0;
    while (x < 10.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    // 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7) - 1/(30x^9)
    double s = inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 - inv2 / 30.0)))));
    return acc + s;
}

// sum_{j>=0} 1/(x+j)^3 = -psi''(x)/2.
inline double cubesum(double x) {
    double acc = 0.0;
    while (x < 10.0) {
        acc += 1.0 / (x * x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    double s = inv2 * (0.5 + inv * (0.5 + inv * (0.25 + inv2 * (-1.0 / 12.0 + inv2 / 12.0))));
    return acc + s;
}

struct PreimageAtom {
    double x;
    double weight;
};

// Far inverse branches of the Gauss map, grouped per geometric index block.
// Mass, nu-weighted centroid, and within-block variance are exact
// (telescoping + polygamma sums); k_hi < 0 marks the unbounded final block.
struct TailBlock {
    double mass;
    double centroid;
    double var;  // within-block variance of the preimage position
    std::int64_t k_lo;
    std::int64_t k_hi;
};

struct PreimageSet {
    std::vector<PreimageAtom> atoms;
    std::vector<TailBlock> blocks;

    double weight_sum() const {
        Accumulator a;
        for (const auto& p : atoms) a.add(p.weight);
        for (const auto& b : blocks) a.add(b.mass);
        return a.value();
    }
};

// One inverse branch as a function of the image variable, for interval
// geometry (Ulam rows, conjugacy tests).
struct BranchInverse {
    double y_lo;
    double y_hi;  // branch image is [y_lo, y_hi)
    std::function<double(double)> s;
    bool increasing;
};

// A piecewise monotone uniformly expanding map of [0,1) with its invariant
// density. Branch domains are left-closed right-open; densities, CDFs and
// inverse-branch weights are analytic so that K1 = 1 holds to rounding.
class IntervalMap {
  public:
    virtual ~IntervalMap() = default;

    virtual std::string name() const = 0;
    virtual double expansion() const = 0;     // lambda > 1
    virtual double forward(double x) const = 0;
    virtual double density(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double inv_cdf(double u) const = 0;
    virtual PreimageSet preimages(double y) const = 0;
    // Exact inverse-CDF draw over the preimage index given one uniform.
    virtual double sample_preimage(double y, double u) const = 0;
    // Branch partition points (truncated list for countably many branches).
    virtual std::vector<double> branch_bounds() const = 0;
    // Inverse branches; maps with countably many return at least min_count.
    virtual std::vector<BranchInverse> branch_inverses(int min_count = 0) const = 0;
    virtual std::vector<double> density_breakpoints() const { return {}; }
    virtual bool countable_branches() const { return false; }
    // True when forward iteration degenerates in binary floating point
    // (power-of-two slopes shift one mantissa bit out per step).
    virtual bool forward_orbit_collapses() const { return false; }

    double nu_interval(double a, double b) const { return cdf(b) - cdf(a); }
};

using MapPtr = std::shared_ptr<const IntervalMap>;

class DoublingMap final : public IntervalMap {
  public:
    std::string name() const override { return "doubling"; }
    double expansion() const override { return 2.0; }
    double forward(double x) const override { return x < 0.5 ? 2.0 * x : 2.0 * x - 1.0; }
    double density(double) const override { return 1.0; }
    double cdf(double x) const override { return x; }
    double inv_cdf(double u) const override { return u; }

    PreimageSet preimages(double y) const override {
        return {{{0.5 * y, 0.5}, {0.5 * (y + 1.0), 0.5}}, {}};
    }
    double sample_preimage(double y, double u) const override {
        return u < 0.5 ? 0.5 * y : 0.5 * (y + 1.0);
    }
    std::vector<double> branch_bounds() const override { return {0.0, 0.5, 1.0}; }
    std::vector<BranchInverse> branch_inverses(int = 0) const override {
        return {{0.0, 1.0, [](double y) { return 0.5 * y; }, true},
                {0.0, 1.0, [](double y) { return 0.5 * (y + 1.0); }, true}};
    }
    bool forward_orbit_collapses() const override { return true; }
};

// Piecewise linear with one increasing and one decreasing onto branch
// (Lebesgue-invariant); exercises inverse-branch orientation handling.
class SkewTentMap final : public IntervalMap {
  public:
    explicit SkewTentMap(double a) : a_(a) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("skewtent: parameter a must lie in (0,1)");
    }
    std::string name() const override { return "skewtent"; }
    double expansion() const override { return std::min(1.0 / a_, 1.0 / (1.0 - a_)); }
    double forward(double x) const override { return x < a_ ? x / a_ : (1.0 - x) / (1.0 - a_); }
    double density(double) const override { return 1.0; }
    double cdf(double x) const override { return x; }
    double inv_cdf(double u) const override { return u; }

    PreimageSet preimages(double y) const override {
        return {{{a_ * y, a_}, {1.0 - (1.0 - a_) * y, 1.0 - a_}}, {}};
    }
    double sample_preimage(double y, double u) const override {
        return u < a_ ? a_ * y : 1.0 - (1.0 - a_) * y;
    }
    std::vector<double> branch_bounds() const override { return {0.0, a_, 1.0}; }
    std::vector<BranchInverse> branch_inverses(int = 0) const override {
        const double a = a_;
        return {{0.0, 1.0, [a](double y) { return a * y; }, true},
                {0.0, 1.0, [a](double y) { return 1.0 - (1.0 - a) * y; }, false}};
    }
    bool forward_orbit_collapses() const override { return a_ == 0.5; }
    double param() const { return a_; }

  private:
    double a_;
};

// beta-transformation x -> beta*x mod 1 with the Parry invariant density
// h(x) = C * sum_{n>=0} beta^-n 1_{x < T^n(1)}, evaluated exactly from the
// orbit of 1 (series truncated below 1e-18).
class BetaMap final : public IntervalMap {
  public:
    explicit BetaMap(double beta) : beta_(beta) {
        if (!(beta > 1.0)) throw ConfigError("beta: parameter beta must exceed 1");
        double t = 1.0, w = 1.0;
        while (w > 1e-18 && orbit_.size() < 4000) {
            orbit_.push_back(t);
            weights_.push_back(w);
            double y = beta_ * t;
            t = y - std::floor(y);
            w /= beta_;
        }
        // Sorted breakpoints with cumulative sums for O(log) evaluation.
        std::vector<std::size_t> idx(orbit_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return orbit_[i] < orbit_[j]; });
        xs_.reserve(idx.size());
        double cw = 0, cwt = 0;
        for (std::size_t i : idx) {
            xs_.push_back(orbit_[i]);
            cw += weights_[i];
            cwt += weights_[i] * orbit_[i];
            cum_w_.push_back(cw);
            cum_wt_.push_back(cwt);
        }
        total_w_ = cw;
        norm_ = 1.0 / cwt;  // integral of the unnormalized series is sum w_n t_n
        cdf_at_knots_.reserve(xs_.size());
        for (double x : xs_) cdf_at_knots_.push_back(cdf(x));
    }

    std::string name() const override { return "beta"; }
    double expansion() const override { return beta_; }
    double forward(double x) const override {
        double y = beta_ * x;
        return y - std::floor(y);
    }

    double density(double x) const override { return norm_ * weight_above(x); }

    double cdf(double x) const override {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        std::size_t k = upper_index(x);
        const double w_le = k ? cum_w_[k - 1] : 0.0;
        const double wt_le = k ? cum_wt_[k - 1] : 0.0;
        return norm_ * (wt_le + x * (total_w_ - w_le));
    }

    double inv_cdf(double u) const override {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return std::nextafter(1.0, 0.0);
        // CDF is piecewise linear with knots at the orbit points.
        auto it = std::lower_bound(cdf_at_knots_.begin(), cdf_at_knots_.end(), u);
        const std::size_t i = static_cast<std::size_t>(it - cdf_at_knots_.begin());
        const double lo = i ? xs_[i - 1] : 0.0;
        const double hi = i < xs_.size() ? xs_[i] : 1.0;
        const double flo = i ? cdf_at_knots_[i - 1] : 0.0;
        const double slope = density(0.5 * (lo + hi));
        return std::min(lo + (u - flo) / slope, std::nextafter(1.0, 0.0));
    }

    PreimageSet preimages(double y) const override {
        PreimageSet out;
        const double hy = density(y);
        if (!(hy > 0.0)) throw NumericError("beta: invariant density vanished at " + std::to_string(y));
        const int kmax = static_cast<int>(std::ceil(beta_)) - 1;
        for (int k = 0; k <= kmax; ++k) {
            double s = (y + k) / beta_;
            if (s >= 1.0) break;
            out.atoms.push_back({s, density(s) / (beta_ * hy)});
        }
        return out;
    }

    double sample_preimage(double y, double u) const override {
        const auto set = preimages(y);
        double acc = 0.0;
        for (std::size_t i = 0; i < set.atoms.size(); ++i) {
            acc += set.atoms[i].weight;
            if (u < acc || i + 1 == set.atoms.size()) return set.atoms[i].x;
        }
        return set.atoms.back().x;
    }

    std::vector<double> branch_bounds() const override {
        std::vector<double> b{0.0};
        for (int k = 1; k <= static_cast<int>(std::ceil(beta_)) - 1; ++k) b.push_back(k / beta_);
        b.push_back(1.0);
        return b;
    }
    std::vector<BranchInverse> branch_inverses(int = 0) const override {
        std::vector<BranchInverse> out;
        const double beta = beta_;
        const int kmax = static_cast<int>(std::ceil(beta_)) - 1;
        for (int k = 0; k <= kmax; ++k) {
            const double y_hi = std::min(1.0, beta_ - k);
            if (y_hi <= 0.0) break;
            out.push_back({0.0, y_hi, [beta, k](double y) { return (y + k) / beta; }, true});
        }
        return out;
    }
    std::vector<double> density_breakpoints() const override { return xs_; }
    bool forward_orbit_collapses() const override {
        const double l2 = std::log2(beta_);
        return l2 == std::floor(l2);
    }
    double param() const { return beta_; }

  private:
    std::size_t upper_index(double x) const {
        // number of orbit points t with t <= x
        return static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    }
    double weight_above(double x) const {
        std::size_t k = upper_index(x);
        return total_w_ - (k ? cum_w_[k - 1] : 0.0);
    }

    double beta_;
    std::vector<double> orbit_, weights_;  // t_n and beta^-n, generation order
    std::vector<double> xs_, cum_w_, cum_wt_, cdf_at_knots_;
    double total_w_ = 0.0, norm_ = 1.0;
};

// Gauss map x -> 1/x mod 1, invariant density 1/((1+x) log 2). Countably many
// inverse branches s_k(y) = 1/(k+y) with weights (1+y)/((k+y)(k+y+1)); the
// enumerated range is exact and the remainder is carried by tail blocks whose
// mass telescopes exactly, so weight sums are 1 to rounding.
class GaussMap final : public IntervalMap {
  public:
    explicit GaussMap(int enumerated = 96) : k_enum_(enumerated) {
        if (enumerated < 8) throw ConfigError("gauss: need at least 8 enumerated branches");
    }

    std::string name() const override { return "gauss"; }
    // |T'| = 1/x^2 > 1 on [0,1); the infimum over the evaluation range
    // (x <= 1 - 2^-16) is recorded since |T'| -> 1 at the right endpoint.
    double expansion() const override { return 1.0 / sqr(1.0 - 1.52587890625e-5); }
    double forward(double x) const override {
        if (x <= 1e-300) return 0.0;
        double r = 1.0 / x;
        return r - std::floor(r);
    }
    double density(double x) const override { return 1.0 / ((1.0 + x) * kLn2); }
    double cdf(double x) const override { return std::log2(1.0 + x); }
    double inv_cdf(double u) const override { return std::expm1(u * kLn2); }

    PreimageSet preimages(double y) const override {
        PreimageSet out;
        out.atoms.reserve(k_enum_);
        for (int k = 1; k <= k_enum_; ++k)
            out.atoms.push_back({1.0 / (k + y), weight_at(y, k)});
        std::int64_t lo = k_enum_;
        while (lo < (std::int64_t{1} << 31)) {
            std::int64_t hi = std::max(lo + 1, (3 * lo) / 2);
            out.blocks.push_back(block_of(y, lo, hi));
            lo = hi;
        }
        out.blocks.push_back(block_of(y, lo, -1));
        return out;
    }

    double sample_preimage(double y, double u) const override {
        // P(K >= k) = (1+y)/(k+y); invert with one uniform, no truncation.
        double k = std::floor((1.0 + y) / std::max(u, 1e-300) - y);
        if (k < 1.0) k = 1.0;
        return 1.0 / (k + y);
    }

    // Exact draw of the branch index inside block (k_lo, k_hi].
    double sample_preimage_in_block(double y, const TailBlock& b, double u) const {
        const double p_lo = (1.0 + y) / (b.k_lo + 1.0 + y);
        const double p_hi = b.k_hi < 0 ? 0.0 : (1.0 + y) / (b.k_hi + 1.0 + y);
        const double tau = p_hi + u * (p_lo - p_hi);
        double k = std::floor((1.0 + y) / std::max(tau, 1e-300) - y);
        if (k < b.k_lo + 1) k = static_cast<double>(b.k_lo + 1);
        if (b.k_hi > 0 && k > static_cast<double>(b.k_hi)) k = static_cast<double>(b.k_hi);
        return 1.0 / (k + y);
    }

    std::vector<double> branch_bounds() const override {
        std::vector<double> b{0.0};
        for (int k = k_enum_; k >= 1; --k) b.push_back(1.0 / k);
        return b;
    }
    std::vector<BranchInverse> branch_inverses(int min_count = 0) const override {
        std::vector<BranchInverse> out;
        const int count = std::max(k_enum_, min_count);
        out.reserve(count);
        for (int k = 1; k <= count; ++k)
            out.push_back({0.0, 1.0, [k](double y) { return 1.0 / (k + y); }, false});
        return out;
    }
    bool countable_branches() const override { return true; }
    int enumerated() const { return k_enum_; }

  private:
    static constexpr double kLn2 = 0.6931471805599453;

    static double weight_at(double y, double k) {
        return (1.0 + y) / ((k + y) * (k + y + 1.0));
    }

    static TailBlock block_of(double y, std::int64_t a, std::int64_t b) {
        // moments over k in (a,b] from the partial fractions of
        // 1/(x^r (x+1)): telescoping + trigamma + cube sums.
        const double ya = a + 1.0 + y;
        const double inv_a = 1.0 / ya, tri_a = trigamma(ya), cub_a = cubesum(ya);
        double inv_b = 0.0, tri_b = 0.0, cub_b = 0.0;
        if (b > 0) {
            const double yb = b + 1.0 + y;
            inv_b = 1.0 / yb;
            tri_b = trigamma(yb);
            cub_b = cubesum(yb);
        }
        const double mass = (1.0 + y) * (inv_a - inv_b);
        const double s1 = (1.0 + y) * ((tri_a - tri_b) - (inv_a - inv_b));
        const double s2 = (1.0 + y) * ((inv_a - inv_b) - (tri_a - tri_b) + (cub_a - cub_b));
        const double c = mass > 0.0 ? s1 / mass : 0.0;
        const double var = mass > 0.0 ? std::max(0.0, s2 / mass - c * c) : 0.0;
        return {mass, c, var, a, b};
    }

    int k_enum_;
};

inline MapPtr make_map(const std::string& id, const std::map<std::string, double>& params = {}) {
    auto get = [&](const std::string& key, double dflt) {
        auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    };
    if (id == "doubling") return std::make_shared<DoublingMap>();
    if (id == "skewtent") return std::make_shared<SkewTentMap>(get("a", 0.4));
    if (id == "beta") return std::make_shared<BetaMap>(get("beta", 1.5));
    if (id == "gauss") return std::make_shared<GaussMap>(static_cast<int>(get("branches", 96)));
    throw ConfigError("unknown map id: " + id);
}

inline std::vector<std::string> map_catalog() { return {"doubling", "skewtent", "beta", "gauss"}; }

// Deterministic orbit x, T(x), ..., T^{n-1}(x).
inline std::vector<double> iterate(const IntervalMap& map, double x, std::size_t n) {
    if (n < 1) throw ConfigError("iterate: n must be >= 1");
    if (!(x >= 0.0 && x < 1.0)) throw ConfigError("iterate: x must lie in [0,1)");
    std::vector<double> orbit(n);
    orbit[0] = x;
    for (std::size_t k = 1; k < n; ++k) orbit[k] = map.forward(orbit[k - 1]);
    return orbit;
}

// A stationary forward orbit of length n (T^0 x0, ..., T^{n-1} x0 with
// x0 ~ nu). Maps whose forward iteration collapses in floating point are
// sampled as reversed backward-chain paths: exact in law by the reverse-time
// duality and exactly T-consistent step by step.
template <typename Rng>
std::vector<double> sample_forward_orbit(const IntervalMap& map, std::size_t n, Rng& rng) {
    std::vector<double> orbit(n);
    if (!map.forward_orbit_collapses()) {
        orbit[0] = map.inv_cdf(rng.uniform_pos());
        for (std::size_t k = 1; k < n; ++k) orbit[k] = map.forward(orbit[k - 1]);
        return orbit;
    }
    double y = map.inv_cdf(rng.uniform_pos());
    for (std::size_t k = 0; k < n; ++k) {
        y = map.sample_preimage(y, rng.uniform_pos());
        orbit[n - 1 - k] = y;
    }
    return orbit;
}

}  // namespace asiplab
