#include <catch_amalgamated.hpp>

#include "asiplab/quadrature.hpp"
#include "asiplab/transfer.hpp"
#include "asiplab/ulam.hpp"

using namespace asiplab;

#include "duality_check.hpp"

namespace {

TransferPtr make_op(const std::string& id, std::size_t cells = std::size_t{1} << 16) {
    return std::make_shared<AnalyticTransfer>(make_map(id), cells);
}

}  // namespace

TEST_CASE("apply_K doubling identity observable") {
    auto op = make_op("doubling", 1 << 12);
    auto f = [](double x) { return x; };
    for (double y : {0.1, 0.37, 0.62, 0.93})
        REQUIRE(op->apply_point(f, y) == Catch::Approx(y / 2.0 + 0.25).margin(1e-14));
    // K^2 f = y/4 + 3/8 through the grid pipeline
    GridFn k2 = op->power_apply(f, 2);
    for (double y : {0.2, 0.5, 0.8})
        REQUIRE(k2(y) == Catch::Approx(y / 4.0 + 0.375).margin(1e-10));
}

TEST_CASE("K preserves constants and the unit function on all maps") {
    for (const auto& id : map_catalog()) {
        auto op = make_op(id, 1 << 12);
        auto one = [](double) { return 1.0; };
        double worst = 0.0;
        for (int i = 0; i < 200; ++i)
            worst = std::max(worst, std::fabs(op->apply_point(one, (i + 0.5) / 200.0) - 1.0));
        INFO(id);
        REQUIRE(worst < 1e-10);  // K1 = 1
        GridFn c = op->power_apply([](double) { return 0.7; }, 5);
        REQUIRE(std::fabs(c(0.3) - 0.7) < 1e-10);
    }
}

TEST_CASE("power_apply doubling: closed-form contraction") {
    auto op = make_op("doubling");
    GridFn g = op->power_apply([](double x) { return x; }, 10);
    double sup = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i) sup = std::max(sup, std::fabs(g[i] - 0.5));
    // sup |K^10 f - 1/2| = 2^-11 on the full interval; the midpoint grid sees
    // it up to half a cell
    REQUIRE(sup == Catch::Approx(std::pow(2.0, -11.0)).margin(1e-7));
}

TEST_CASE("transfer duality on every catalog map") {
    for (const auto& id : map_catalog()) {
        auto map = make_map(id);
        AnalyticTransfer op(map, 1 << 10);  // apply_point does not use the grid
        double worst = 0.0;
        for (const auto& f : asiplab_testutil::duality_f_dict())
            for (const auto& g : asiplab_testutil::duality_g_dict())
                worst = std::max(worst, asiplab_testutil::duality_gap(*map, op, f, g));
        INFO(id << " worst duality gap " << worst);
        REQUIRE(worst < 1e-6);
    }
}

TEST_CASE("mean preservation under operator powers") {
    for (const auto& id : map_catalog()) {
        auto op = make_op(id);
        GridFn g = op->sample([](double x) { return std::cos(6.283185307179586 * x) + x; });
        const double m0 = op->nu_grid(g);
        double worst = 0.0;
        for (int n = 1; n <= 10; ++n) {
            g = op->apply(g);
            worst = std::max(worst, std::fabs(op->nu_grid(g) - m0));
        }
        INFO(id << " mean drift " << worst);
        REQUIRE(worst < 1e-8);
    }
}

TEST_CASE("fit_decay doubling identity: exact geometric rate") {
    auto op = make_op("doubling");
    const DecayReport rep = op->fit_decay([](double x) { return x; }, Norm::Inf, 20);
    REQUIRE_FALSE(rep.degenerate);
    REQUIRE(rep.rho_hat == Catch::Approx(0.5).margin(0.02));
    for (int n = 1; n <= 16; ++n)
        REQUIRE(rep.norms[n - 1] ==
                Catch::Approx(std::pow(2.0, -(n + 1.0))).epsilon(1e-3));
}

TEST_CASE("fit_decay flags constants as degenerate") {
    auto op = make_op("doubling", 1 << 12);
    const DecayReport rep = op->fit_decay([](double) { return 3.0; }, Norm::Inf, 12);
    REQUIRE(rep.degenerate);
}

TEST_CASE("fit_decay gauss identity in L2") {
    auto op = make_op("gauss", 1 << 13);
    const DecayReport rep = op->fit_decay([](double x) { return x; }, Norm::L2, 20);
    REQUIRE_FALSE(rep.degenerate);
    REQUIRE(rep.rho_hat < 1.0);
    REQUIRE(rep.fit_residual < 0.1);
}

TEST_CASE("norms are nonincreasing up to slack once n >= 2") {
    for (const auto& id : map_catalog()) {
        auto op = make_op(id, 1 << 13);
        const DecayReport rep = op->fit_decay([](double x) { return x * x; }, Norm::L2, 14);
        for (std::size_t n = 2; n + 1 < rep.norms.size(); ++n)
            REQUIRE(rep.norms[n + 1] <= rep.norms[n] * 1.05 + 1e-13);
    }
}

TEST_CASE("moment-rate condition checker on the doubling map") {
    auto op = make_op("doubling");
    const Observable f = observable_catalog("identity_centered");
    const double gamma = 0.5773502691896258;
    const MomentConditionReport rep = op->check_moment_conditions(f, gamma, 40);
    REQUIRE(rep.series1.summable);
    REQUIRE(rep.series2.summable);
    REQUIRE(rep.series1.geometric);
    // quadrature oracle: ||x - 1/2||_4^4 = 1/80
    const double q = integrate_piecewise(
        [](double x) { return sqr(sqr(x - 0.5)); }, {});
    REQUIRE(q == Catch::Approx(1.0 / 80.0).epsilon(1e-12));
    // summand(n) = (log n)^3 n^{1/gamma + 1/2} * 4^{-n} / sqrt(80)
    for (int n : {4, 8, 16}) {
        const double expect = std::pow(std::log(static_cast<double>(n)), 3.0) *
                              std::pow(static_cast<double>(n), 1.0 / gamma + 0.5) *
                              std::pow(4.0, -n) / std::sqrt(80.0);
        REQUIRE(rep.terms1[n - 2] == Catch::Approx(expect).epsilon(2e-2));
    }
}

TEST_CASE("moment-rate conditions on a constant observable give zero sums") {
    auto op = make_op("doubling", 1 << 12);
    Observable c = observable_catalog("identity_centered");
    c.eval = [](double) { return 1.7; };
    const MomentConditionReport rep = op->check_moment_conditions(c, 0.5773502691896258, 20);
    REQUIRE(rep.series1.partial_sum < 1e-12);
    REQUIRE(rep.series2.partial_sum < 1e-12);
    REQUIRE(rep.series1.summable);
}

TEST_CASE("artificial rho=1 norms are flagged non-summable") {
    // negative control for the summability classifier
    std::vector<double> terms;
    for (int n = 2; n <= 40; ++n)
        terms.push_back(std::pow(std::log(static_cast<double>(n)), 3.0) *
                        std::pow(static_cast<double>(n), 2.232) * 1e-4);
    const SeriesVerdict v = classify_series(terms);
    REQUIRE_FALSE(v.summable);
}

TEST_CASE("moment-rate conditions reject observables without a fourth moment") {
    auto op = make_op("doubling", 1 << 12);
    const Observable f = observable_catalog("power_singularity", {{"a", 0.3}, {"p", 3.0}});
    REQUIRE_THROWS_AS(op->check_moment_conditions(f, 0.5773502691896258, 20), NumericError);
}

TEST_CASE("lipschitz condition checker: doubling contracts at rate 1/2") {
    auto op = make_op("doubling", 1 << 13);
    const ContractionReport rep = op->check_lipschitz_contraction(20, 16);
    REQUIRE(rep.rho1 == Catch::Approx(0.5).margin(0.05));
    REQUIRE(rep.rho2 < 1.0);
}

TEST_CASE("lipschitz condition checker: beta map decays") {
    auto op = make_op("beta", 1 << 13);
    const ContractionReport rep = op->check_lipschitz_contraction(20, 16);
    REQUIRE(rep.rho1 < 1.0);
    REQUIRE(rep.rho2 < 1.0);
}

TEST_CASE("ulam rows are stochastic and cell masses are left-fixed") {
    for (const auto& id : map_catalog()) {
        UlamTransfer ulam(*make_map(id), 512);
        INFO(id);
        REQUIRE(ulam.max_row_sum_defect() < 1e-10);
        REQUIRE(ulam.stationarity_defect() < 1e-8);
    }
}

TEST_CASE("ulam power iteration recovers the invariant cell masses") {
    auto map = make_map("beta");
    UlamTransfer ulam(*map, 256);
    const auto mu = ulam.left_fixed_vector(400);
    const auto& exact = ulam.cell_masses();
    double l1 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) l1 += std::fabs(mu[i] - exact[i]);
    REQUIRE(l1 < 1e-8);
}

TEST_CASE("ulam consistency: error halves as the partition refines") {
    auto map = make_map("doubling");
    auto exact = [](double y, int n) {
        return std::pow(2.0, -n) * y + 0.5 * (1.0 - std::pow(2.0, -n));
    };
    std::vector<double> errs;
    for (std::size_t m : {std::size_t{1024}, std::size_t{2048}, std::size_t{4096}}) {
        UlamTransfer ulam(*map, m);
        GridFn f = GridFn::sample(m, [](double x) { return x; });
        double worst = 0.0;
        for (int n = 1; n <= 10; ++n) {
            f = ulam.apply(f);
            for (std::size_t i = 0; i < m; ++i)
                worst = std::max(worst, std::fabs(f[i] - exact(f.mid(i), n)));
        }
        errs.push_back(worst);
    }
    REQUIRE(errs[2] < 1e-3);  // m = 4096 against the analytic oracle
    REQUIRE(errs[1] < errs[0]);
    REQUIRE(errs[2] < errs[1]);
}
