#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "asiplab/common.hpp"

namespace asiplab {

// Function on [0,1) stored at the midpoints of a uniform cell partition.
// `nearest` treats it as piecewise constant (right for indicators and other
// BV data), `operator()` interpolates linearly with linear edge extrapolation
// (right for smooth data; exact on affine functions).
//
// A function may carry breakpoint knots (one-sided values at listed jump
// points); interpolation then never crosses a jump. The beta-map transfer
// iterates are discontinuous exactly on the forward orbit of 1, so this keeps
// their evaluation first-order-free of jump smearing.
class GridFn {
  public:
    GridFn() = default;
    explicit GridFn(std::size_t cells, double fill = 0.0) : v_(cells, fill) {}

    template <typename F>
    static GridFn sample(std::size_t cells, F&& f) {
        GridFn g(cells);
        const double h = 1.0 / static_cast<double>(cells);
        for (std::size_t i = 0; i < cells; ++i) g.v_[i] = f((i + 0.5) * h);
        return g;
    }

    std::size_t cells() const { return v_.size(); }
    double h() const { return 1.0 / static_cast<double>(v_.size()); }
    double mid(std::size_t i) const { return (i + 0.5) * h(); }

    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    void set_knots(std::vector<double> x, std::vector<double> left, std::vector<double> right) {
        brk_x_ = std::move(x);
        brk_l_ = std::move(left);
        brk_r_ = std::move(right);
    }
    bool has_knots() const { return !brk_x_.empty(); }
    const std::vector<double>& knot_x() const { return brk_x_; }
    std::vector<double>& knot_left() { return brk_l_; }
    std::vector<double>& knot_right() { return brk_r_; }
    const std::vector<double>& knot_left() const { return brk_l_; }
    const std::vector<double>& knot_right() const { return brk_r_; }

    std::size_t cell_index(double x) const {
        const auto n = static_cast<std::ptrdiff_t>(v_.size());
        auto i = static_cast<std::ptrdiff_t>(x * static_cast<double>(n));
        if (i < 0) i = 0;
        if (i >= n) i = n - 1;
        return static_cast<std::size_t>(i);
    }

    double nearest(double x) const { return v_[cell_index(x)]; }

    double operator()(double x) const {
        const auto n = static_cast<std::ptrdiff_t>(v_.size());
        if (n == 1) return v_[0];
        double t = x * static_cast<double>(n) - 0.5;
        auto i0 = static_cast<std::ptrdiff_t>(std::floor(t));
        if (i0 < 0) i0 = 0;
        if (i0 > n - 2) i0 = n - 2;
        if (!brk_x_.empty()) return interp_piece(x, i0);
        const double w = t - static_cast<double>(i0);
        return v_[i0] + w * (v_[i0 + 1] - v_[i0]);
    }

    double max_abs() const {
        double m = 0;
        for (double x : v_) m = std::max(m, std::fabs(x));
        return m;
    }

    // Second difference at the cell containing x (clamped to the interior);
    // used for the second-moment correction of aggregated preimage blocks.
    double curvature(double x) const {
        const auto n = static_cast<std::ptrdiff_t>(v_.size());
        if (n < 3) return 0.0;
        auto i = static_cast<std::ptrdiff_t>(cell_index(x));
        if (i < 1) i = 1;
        if (i > n - 2) i = n - 2;
        const double hh = h();
        return (v_[i + 1] - 2.0 * v_[i] + v_[i - 1]) / (hh * hh);
    }

  private:
    // Linear interpolation clamped to the smooth piece containing x; pieces
    // with no interior midpoint interpolate between their two knot values.
    double interp_piece(double x, std::ptrdiff_t i0) const {
        const auto kidx = static_cast<std::size_t>(
            std::upper_bound(brk_x_.begin(), brk_x_.end(), x) - brk_x_.begin());
        const double lo = kidx == 0 ? 0.0 : brk_x_[kidx - 1];
        const double hi = kidx < brk_x_.size() ? brk_x_[kidx] : 1.0;
        double x0 = mid(static_cast<std::size_t>(i0)), v0 = v_[i0];
        double x1 = mid(static_cast<std::size_t>(i0) + 1), v1 = v_[i0 + 1];
        if (x0 < lo) {
            x0 = lo;
            v0 = brk_r_[kidx - 1];
        }
        if (x1 >= hi && kidx < brk_x_.size()) {
            x1 = hi;
            v1 = brk_l_[kidx];
        }
        if (x1 - x0 < 1e-300) return 0.5 * (v0 + v1);
        const double w = (x - x0) / (x1 - x0);
        return v0 + w * (v1 - v0);
    }

    std::vector<double> v_;
    std::vector<double> brk_x_, brk_l_, brk_r_;
};

}  // namespace asiplab
