#include <catch_amalgamated.hpp>

#include "asiplab/observables.hpp"
#include "asiplab/quadrature.hpp"

using namespace asiplab;

TEST_CASE("identity observable") {
    const Observable f = observable_catalog("identity_centered");
    REQUIRE(f.reg == RegClass::BV);
    REQUIRE(f.variation == 1.0);
    REQUIRE(f.eval(0.37) == 0.37);
}

TEST_CASE("power singularity moment bound (Lebesgue oracle)") {
    const Observable f = observable_catalog("power_singularity", {{"a", 0.3}, {"p", 3.0}});
    // nu(|f|^3) = int x^{-0.9} dx = 10, by dyadic-refinement quadrature
    const double moment = integrate_singular_origin(
        [&](double x) { return std::pow(std::fabs(f.eval(x)), 3.0); });
    REQUIRE(moment == Catch::Approx(10.0).epsilon(1e-9));
    REQUIRE(std::pow(f.moment_bound, 3.0) == Catch::Approx(10.0).epsilon(1e-12));
    REQUIRE_FALSE(f.bounded);
}

TEST_CASE("power singularity rejects non-square-integrable exponents") {
    REQUIRE_THROWS_AS(observable_catalog("power_singularity", {{"a", 0.5}}), ConfigError);
    REQUIRE_THROWS_AS(observable_catalog("power_singularity", {{"a", 0.3}, {"p", 3.5}}),
                      ConfigError);  // a*p >= 1
}

TEST_CASE("indicator halfline is Mon_p with the stated moment bound") {
    const Observable f = observable_catalog("indicator_halfline", {{"t", 0.5}, {"p", 3.0}});
    REQUIRE(f.reg == RegClass::MonCombo);
    REQUIRE(f.moment_bound == Catch::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-12));
    // nu(|f|^p) = 1/2 under Lebesgue
    const double moment = integrate_piecewise(
        [&](double x) { return std::pow(std::fabs(f.eval(x)), 3.0); }, {0.5});
    REQUIRE(moment == Catch::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("mon-combo pieces are monotone on their interval and null elsewhere") {
    for (const auto& id : {"indicator_halfline", "power_singularity"}) {
        const Observable f = observable_catalog(id);
        double coeff_sum = 0.0;
        for (const auto& pc : f.pieces) {
            coeff_sum += std::fabs(pc.coeff);
            double prev = pc.f(pc.lo + 1e-9);
            bool incr = true, decr = true;
            for (int i = 1; i <= 100; ++i) {
                const double x = pc.lo + (pc.hi - pc.lo) * i / 101.0;
                const double v = pc.f(x);
                incr = incr && v >= prev - 1e-12;
                decr = decr && v <= prev + 1e-12;
                prev = v;
            }
            INFO(id);
            REQUIRE((incr || decr));
        }
        REQUIRE(coeff_sum <= 1.0 + 1e-12);
        // zero outside the active interval
        if (std::string(id) == "indicator_halfline") REQUIRE(f.eval(0.75) == 0.0);
    }
}

TEST_CASE("holder observable satisfies its modulus") {
    const Observable f = observable_catalog("holder", {{"alpha", 0.5}});
    for (int i = 0; i < 200; ++i) {
        const double x = (i + 0.5) / 200.0, y = 1.0 - x * x;
        REQUIRE(std::fabs(f.eval(x) - f.eval(y)) <=
                f.holder_const * std::pow(std::fabs(x - y), f.alpha) + 1e-12);
    }
}

TEST_CASE("bv example") {
    const Observable f = observable_catalog("bv_example");
    REQUIRE(f.eval(0.25) == 0.25);
    REQUIRE(f.eval(0.75) == Catch::Approx(0.25));
    REQUIRE(f.variation == 1.0);
}
