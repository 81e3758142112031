#include <catch_amalgamated.hpp>

#include "asiplab/chain.hpp"
#include "asiplab/martingale.hpp"

using namespace asiplab;

namespace {
MFunctionPtr doubling_mfun(std::size_t cells = std::size_t{1} << 16) {
    auto op = std::make_shared<AnalyticTransfer>(make_map("doubling"), cells);
    return std::make_shared<MFunction>(op, observable_catalog("identity_centered"));
}
}  // namespace

TEST_CASE("m-function closed form on the doubling map") {
    auto mf = doubling_mfun();
    // m(u,v) = 2u - v - 1/2 from the geometric series
    REQUIRE(mf->eval(0.3, 0.6) == Catch::Approx(-0.5).margin(1e-10));
    REQUIRE(mf->eval(0.8, 0.6) == Catch::Approx(0.5).margin(1e-10));
    REQUIRE(mf->eval(0.25, 0.9) == Catch::Approx(2.0 * 0.25 - 0.9 - 0.5).margin(1e-10));
}

TEST_CASE("m-function vanishes for constants") {
    auto op = std::make_shared<AnalyticTransfer>(make_map("beta"), std::size_t{1} << 13);
    Observable c = observable_catalog("identity_centered");
    c.eval = [](double) { return 2.5; };
    MFunction mf(op, c);
    REQUIRE(std::fabs(mf.eval(0.3, 0.7)) < 1e-10);
    REQUIRE(mf.tail_bound() == 0.0);
}

TEST_CASE("projection oracle on the doubling map") {
    auto mf = doubling_mfun();
    REQUIRE(mf->project(3, 0.0) == Catch::Approx(-1.0 / 16.0).margin(1e-9));
    REQUIRE(mf->project(0, 0.3) == Catch::Approx(0.3 - 0.5).margin(1e-12));
}

TEST_CASE("coboundary closed form and decomposition") {
    auto mf = doubling_mfun();
    // r(y) = y - 1/2
    for (double y : {0.1, 0.4, 0.9})
        REQUIRE(mf->coboundary(y) == Catch::Approx(y - 0.5).margin(1e-10));

    // along a chain path: X_l - d_l = r(Y_{l-1}) - r(Y_l)
    auto map = make_map("doubling");
    RandomStream rng(31, 0);
    ChainPath path = sample_path(*map, 2000, rng);
    double worst = 0.0;
    for (std::size_t l = 1; l < path.states.size(); ++l) {
        const double x = path.states[l] - mf->nu_f();
        const double d = mf->eval(path.states[l], path.states[l - 1]);
        const double rdiff = mf->coboundary(path.states[l - 1]) - mf->coboundary(path.states[l]);
        worst = std::max(worst, std::fabs(x - d - rdiff));
    }
    REQUIRE(worst < 10.0 * std::max(mf->tail_bound(), 1e-11));
}

TEST_CASE("reverse MDS increments are the digit martingale on doubling") {
    auto mf = doubling_mfun();
    RandomStream rng(32, 0);
    const ReverseMDS mds = reverse_mds(mf, 4000, rng);
    for (std::size_t l = 1; l <= mds.increments.size(); ++l) {
        const double expect = mds.orbit[l - 1] >= 0.5 ? 0.5 : -0.5;
        REQUIRE(mds.increments[l - 1] == Catch::Approx(expect).margin(1e-10));
    }
}

TEST_CASE("conditional law of the doubling MDS is a fair +-1/2 coin") {
    auto mf = doubling_mfun();
    const ConditionalLaw law = mf->conditional_law(0.6);
    REQUIRE(law.atoms.size() == 2);
    REQUIRE(law.atoms[0].value == Catch::Approx(-0.5).margin(1e-10));
    REQUIRE(law.atoms[1].value == Catch::Approx(0.5).margin(1e-10));
    REQUIRE(law.atoms[0].weight == 0.5);
    REQUIRE(std::fabs(law.raw_centering_defect) < 1e-12);
    REQUIRE(law.variance == Catch::Approx(0.25).margin(1e-10));
}

TEST_CASE("reverse-MDS centering on every catalog map") {
    for (const auto& id : map_catalog()) {
        const std::size_t cells = std::size_t{1} << (id == "gauss" ? 14 : 16);
        auto op = std::make_shared<AnalyticTransfer>(make_map(id), cells);
        MFunction mf(op, observable_catalog("identity_centered"));
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double v = (i + 0.5) / 1000.0;
            worst = std::max(worst, std::fabs(mf.conditional_law(v).raw_centering_defect));
        }
        INFO(id << " defect " << worst << " tol " << mf.centering_tol());
        REQUIRE(worst < mf.centering_tol());
    }
}

TEST_CASE("empirical MDS mean vanishes") {
    auto mf = doubling_mfun();
    RandomStream rng(33, 0);
    const std::size_t n = 1000000;
    const ReverseMDS mds = reverse_mds(mf, n, rng);
    double s = 0.0;
    for (double d : mds.increments) s += d;
    // sd of the mean is 0.5/sqrt(n)
    REQUIRE(std::fabs(s / static_cast<double>(n)) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("martingale variance transfers to the Eq.-level variance") {
    auto mf = doubling_mfun();
    REQUIRE(mf->mds_variance() == Catch::Approx(0.25).margin(1e-9));
    // Var(M*_n)/n -> sigma^2 = 1/4 within 5%: block sums along one long
    // stream (MDS increments are uncorrelated, so block variances add)
    RandomStream rng(34, 0);
    const std::size_t n = std::size_t{1} << 18, block = 64;
    const ReverseMDS mds = reverse_mds(mf, n, rng);
    const std::size_t nblocks = n / block;
    double s = 0.0, s2 = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) {
        double m = 0.0;
        for (std::size_t i = 0; i < block; ++i) m += mds.increments[b * block + i];
        s += m;
        s2 += m * m;
    }
    const double mean = s / static_cast<double>(nblocks);
    const double var_rate = (s2 / nblocks - mean * mean) / static_cast<double>(block);
    REQUIRE(var_rate == Catch::Approx(0.25).epsilon(0.05));
}

TEST_CASE("m-function truncation is stable in the cap") {
    auto op = std::make_shared<AnalyticTransfer>(make_map("beta"), std::size_t{1} << 13);
    const Observable f = observable_catalog("identity_centered");
    MFunction a(op, f, 40);
    MFunction b(op, f, 48);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double u = (i + 0.5) / 50.0;
        const double v = op->map().forward(u);
        worst = std::max(worst, std::fabs(a.eval(u, v) - b.eval(u, v)));
    }
    REQUIRE(worst <= std::max(a.tail_bound(), 1e-12) * 4.0 + 1e-12);
}

TEST_CASE("block scheme cutoffs and truncation") {
    REQUIRE(block_cutoff(3.0, 8) == Catch::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-12));
    REQUIRE(block_level_of(1) == 1);
    REQUIRE(block_level_of(2) == 1);
    REQUIRE(block_level_of(3) == 1);
    REQUIRE(block_level_of(5) == 2);
    REQUIRE(block_level_of(8) == 2);
    REQUIRE(block_level_of(9) == 3);

    // cutoff is increasing only from j = 3 on (c(2)=1 > c(3)=(8/9)^{1/p})
    for (double p : {2.5, 3.0, 4.0}) {
        REQUIRE(block_cutoff(p, 2) == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(block_cutoff(p, 3) < block_cutoff(p, 2));
        for (int j = 3; j < 20; ++j) REQUIRE(block_cutoff(p, j + 1) > block_cutoff(p, j));
    }
}

TEST_CASE("block scheme on a bounded observable is untruncated once c(j) clears sup|f|") {
    auto op = std::make_shared<AnalyticTransfer>(make_map("doubling"), std::size_t{1} << 13);
    const Observable f = observable_catalog("indicator_halfline", {{"t", 0.5}, {"p", 3.0}});
    const BlockScheme scheme(op, f, 3.0, 6);
    // sup|f| = 1: c(1), c(2), c(4), c(5), ... >= 1 keep f intact, while the
    // dip at j = 3 (c(3) = (8/9)^{1/3} < 1) genuinely truncates.
    for (int j : {1, 2, 4, 5, 6}) {
        const auto& lvl = scheme.level(j);
        for (int i = 0; i < 100; ++i) {
            const double x = (i + 0.5) / 100.0;
            REQUIRE(lvl.truncated.eval(x) == f.eval(x));
        }
    }
    REQUIRE(scheme.level(3).truncated.eval(0.25) == 0.0);
    REQUIRE(f.eval(0.25) == 1.0);
}

TEST_CASE("block scheme truncates the singular observable at the cutoff") {
    auto op = std::make_shared<AnalyticTransfer>(make_map("doubling"), std::size_t{1} << 13);
    const Observable f = observable_catalog("power_singularity", {{"a", 0.3}, {"p", 3.0}});
    const BlockScheme scheme(op, f, 3.0, 12);
    for (int j : {4, 8, 12}) {
        const auto& lvl = scheme.level(j);
        const double xstar = std::pow(lvl.cutoff, -1.0 / 0.3);  // f(xstar) = cutoff
        REQUIRE(lvl.truncated.eval(xstar) == Catch::Approx(lvl.cutoff).margin(1e-9));
        REQUIRE(lvl.truncated.eval(xstar * 0.5) == 0.0);  // beyond the cutoff
        double sup = 0.0;
        for (int i = 1; i <= 2000; ++i) sup = std::max(sup, lvl.truncated.eval(i / 2000.0));
        REQUIRE(sup <= lvl.cutoff + 1e-12);
    }
}

TEST_CASE("block scheme rejects non-MonCombo observables") {
    auto op = std::make_shared<AnalyticTransfer>(make_map("doubling"), std::size_t{1} << 12);
    REQUIRE_THROWS_AS(BlockScheme(op, observable_catalog("identity_centered"), 3.0, 4),
                      ConfigError);
}
