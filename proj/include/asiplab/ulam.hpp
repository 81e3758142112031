#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "asiplab/grid.hpp"
#include "asiplab/maps.hpp"

namespace asiplab {

// Finite-rank Ulam discretization of the backward kernel: entry (i,j) is the
// nu-probability of jumping from cell i to cell j, computed from the exact
// interval geometry of each inverse branch (no subsampling error), so rows
// are stochastic and the cell masses are left-fixed to rounding.
class UlamTransfer {
  public:
    UlamTransfer(const IntervalMap& map, std::size_t m) : m_(m) {
        const double h = 1.0 / static_cast<double>(m_);
        mass_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) mass_[i] = map.nu_interval(i * h, (i + 1) * h);

        const int min_branches =
            map.countable_branches() ? static_cast<int>(m_) + 2 : 0;
        const auto branches = map.branch_inverses(min_branches);

        rows_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            const double ylo = i * h, yhi = (i + 1) * h;
            std::vector<std::pair<std::uint32_t, double>>& row = rows_[i];
            double assigned = 0.0;
            for (const auto& br : branches) {
                const double a = std::max(ylo, br.y_lo);
                const double b = std::min(yhi, br.y_hi);
                if (b <= a) continue;
                double x0 = br.s(a), x1 = br.s(b);
                if (!br.increasing) std::swap(x0, x1);
                if (x1 <= x0) continue;
                auto j0 = static_cast<std::size_t>(std::min(x0 * m_, static_cast<double>(m_ - 1)));
                auto j1 = static_cast<std::size_t>(std::min(x1 * m_, static_cast<double>(m_ - 1)));
                for (std::size_t j = j0; j <= j1; ++j) {
                    const double lo = std::max(x0, j * h);
                    const double hi = std::min(x1, (j + 1) * h);
                    if (hi <= lo) continue;
                    const double w = map.nu_interval(lo, hi);
                    add(row, static_cast<std::uint32_t>(j), w);
                    assigned += w;
                }
            }
            // Countable-branch remainder lives below the finest enumerated
            // branch, i.e. inside cell 0.
            const double rem = mass_[i] - assigned;
            if (rem > 0.0) add(row, 0, rem);
            for (auto& e : row) e.second /= mass_[i];
        }
    }

    std::size_t cells() const { return m_; }
    const std::vector<double>& cell_masses() const { return mass_; }

    GridFn apply(const GridFn& f) const {
        GridFn out(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double s = 0.0;
            for (const auto& e : rows_[i]) s += e.second * f[e.first];
            out[i] = s;
        }
        return out;
    }

    GridFn power_apply(GridFn f, std::size_t n) const {
        for (std::size_t k = 0; k < n; ++k) f = apply(f);
        return f;
    }

    double max_row_sum_defect() const {
        double worst = 0.0;
        for (const auto& row : rows_) {
            double s = 0.0;
            for (const auto& e : row) s += e.second;
            worst = std::max(worst, std::fabs(s - 1.0));
        }
        return worst;
    }

    // ||mu P - mu||_1 for the exact cell masses.
    double stationarity_defect() const {
        std::vector<double> img(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            for (const auto& e : rows_[i]) img[e.first] += mass_[i] * e.second;
        double d = 0.0;
        for (std::size_t j = 0; j < m_; ++j) d += std::fabs(img[j] - mass_[j]);
        return d;
    }

    // Left fixed vector by power iteration, as an independent route to the
    // invariant cell masses.
    std::vector<double> left_fixed_vector(int iters = 200) const {
        std::vector<double> mu(m_, 1.0 / static_cast<double>(m_)), next(m_);
        for (int it = 0; it < iters; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < m_; ++i)
                for (const auto& e : rows_[i]) next[e.first] += mu[i] * e.second;
            mu.swap(next);
        }
        return mu;
    }

  private:
    static void add(std::vector<std::pair<std::uint32_t, double>>& row, std::uint32_t j, double w) {
        if (!row.empty() && row.back().first == j)
            row.back().second += w;
        else
            row.emplace_back(j, w);
    }

    std::size_t m_;
    std::vector<double> mass_;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows_;
};

}  // namespace asiplab
