#include <catch_amalgamated.hpp>

#include "asiplab/coupling.hpp"
#include "asiplab/parallel.hpp"
#include "asiplab/stattests.hpp"

using namespace asiplab;

namespace {

MFunctionPtr doubling_mfun() {
    static MFunctionPtr mf = [] {
        auto op = std::make_shared<AnalyticTransfer>(make_map("doubling"));
        return std::make_shared<MFunction>(op, observable_catalog("identity_centered"));
    }();
    return mf;
}

CouplingTrace doubling_trace(std::size_t n, std::uint64_t seed, std::size_t replica,
                             double sigma_iid = 0.0) {
    RandomStream rng(seed, replica);
    MapMdsSource src(doubling_mfun(), n, doubling_mfun()->op().map().inv_cdf(rng.uniform_pos()));
    CouplingOptions opts;
    opts.sigma_iid = sigma_iid;
    return couple(src, RandomStream(seed ^ 0x5eedc0de, replica), opts);
}

// per-source synthetic law: iid +-1 at every index
class PmOneSource final : public ConditionalLawSource {
  public:
    explicit PmOneSource(std::size_t n) : n_(n) {}
    std::size_t horizon() const override { return n_; }
    ConditionalLaw law(std::size_t) override {
        ConditionalLaw l;
        l.atoms = {{-1.0, 0.5, 0.0, -1}, {1.0, 0.5, 0.0, -1}};
        l.variance = 1.0;
        return l;
    }
    void realize(std::size_t, const ConditionalLaw&, int, RandomStream&) override {}
    double var_target(std::size_t) const override { return 1.0; }

  private:
    std::size_t n_;
};

class ZeroSource final : public ConditionalLawSource {
  public:
    explicit ZeroSource(std::size_t n) : n_(n) {}
    std::size_t horizon() const override { return n_; }
    ConditionalLaw law(std::size_t) override {
        ConditionalLaw l;
        l.atoms = {{0.0, 1.0, 0.0, -1}};
        l.variance = 0.0;
        return l;
    }
    void realize(std::size_t, const ConditionalLaw&, int, RandomStream&) override {}
    double var_target(std::size_t) const override { return 0.0; }

  private:
    std::size_t n_;
};

}  // namespace

TEST_CASE("coupled trajectory is a genuine forward orbit with m-increments") {
    RandomStream rng(51, 0);
    const std::size_t n = 512;
    auto mf = doubling_mfun();
    MapMdsSource src(mf, n, mf->op().map().inv_cdf(rng.uniform_pos()));
    CouplingTrace trace = couple(src, RandomStream(52, 0));
    const std::vector<double> orbit = src.orbit();
    REQUIRE(orbit.size() == n + 1);
    const IntervalMap& map = mf->op().map();
    for (std::size_t k = 0; k + 1 < orbit.size(); ++k)
        REQUIRE(std::fabs(map.forward(orbit[k]) - orbit[k + 1]) < 1e-12);
    for (std::size_t l = 1; l <= n; ++l)
        REQUIRE(std::fabs(trace.increments[l - 1] - mf->eval(orbit[l - 1], orbit[l])) <
                mf->centering_tol());
}

TEST_CASE("coupling is deterministic in the seed") {
    const CouplingTrace a = doubling_trace(1 << 10, 99, 3);
    const CouplingTrace b = doubling_trace(1 << 10, 99, 3);
    REQUIRE(a.increments == b.increments);
    REQUIRE(a.gaussian == b.gaussian);
    REQUIRE(a.stop_times == b.stop_times);
}

TEST_CASE("gaussian partners: variance match, normality, independence proxy") {
    const std::size_t n = 1 << 12;
    const int reps = 400;
    std::vector<double> pooled(n * reps);
    parallel_replicas(reps, 8, [&](std::size_t r) {
        const CouplingTrace t = doubling_trace(n, 777, r);
        for (std::size_t i = 0; i < n; ++i) pooled[r * n + i] = t.gaussian[i] / 0.5;
    });
    // variance per dyadic block within 3% (blocks large enough that 3% is
    // beyond the 3-sigma band of the estimator)
    for (std::size_t lo = 64; lo < n; lo *= 2) {
        double s2 = 0.0;
        std::size_t cnt = 0;
        for (int r = 0; r < reps; ++r)
            for (std::size_t i = lo; i < 2 * lo && i < n; ++i) {
                s2 += sqr(pooled[r * n + i]);
                ++cnt;
            }
        if (cnt < 20000) continue;
        INFO("block " << lo);
        REQUIRE(s2 / cnt == Catch::Approx(1.0).epsilon(0.03));
    }
    // KS normality at the 1% level
    std::vector<double> sub(pooled.begin(), pooled.begin() + 100000);
    const double d = ks_statistic(std::move(sub), [](double x) { return normal_cdf(x); });
    REQUIRE(d < 1.628 / std::sqrt(100000.0));
    // lag-1/2 autocorrelation below 3/sqrt(N)
    std::vector<double> one(pooled.begin(), pooled.begin() + n);
    REQUIRE(std::fabs(autocorrelation(one, 1)) < 3.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::fabs(autocorrelation(one, 2)) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("clock fidelity along a coupling") {
    const std::size_t n = 1 << 12;
    const CouplingTrace t = doubling_trace(n, 61, 0);
    double mean_stop = 0.0;
    for (double s : t.stop_times) mean_stop += s;
    mean_stop /= static_cast<double>(n);
    REQUIRE(mean_stop == Catch::Approx(0.25).epsilon(0.02));
}

TEST_CASE("sup error is strictly sub-diffusive at n = 2^14") {
    const std::size_t n = 1 << 14;
    const int reps = 40;
    std::vector<double> ratios(reps);
    parallel_replicas(reps, 4, [&](std::size_t r) {
        const CouplingTrace t = doubling_trace(n, 62, r);
        double m = 0.0, z = 0.0, sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m += t.increments[i];
            z += t.gaussian[i];
            sup = std::max(sup, std::fabs(m - z));
        }
        ratios[r] = sup / std::sqrt(static_cast<double>(n));
    });
    REQUIRE(median_of(ratios) < 0.5);
}

TEST_CASE("single-increment coupling is trivially bounded") {
    const int reps = 200;
    double mean_err = 0.0;
    for (int r = 0; r < reps; ++r) {
        const CouplingTrace t = doubling_trace(2, 63, r);
        mean_err += std::fabs(t.increments[0] - t.gaussian[0]);
    }
    mean_err /= reps;
    REQUIRE(mean_err < 2.0 * 0.5);  // 2 E|X_1|, E|X_1| = 1/2
}

TEST_CASE("zero-variance increments get independent iid partners") {
    ZeroSource src(16);
    CouplingOptions opts;
    opts.sigma_iid = 1.0;
    const CouplingTrace t = couple(src, RandomStream(64, 0), opts);
    for (double v : t.increments) REQUIRE(v == 0.0);
    for (double z : t.gaussian) REQUIRE(z == 0.0);
    double spread = 0.0;
    for (double z : t.gaussian_iid) spread += sqr(z);
    REQUIRE(spread > 0.0);  // substituted N(0, sigma^2) draws
}

TEST_CASE("tail series: harmonic schedule matches the closed form") {
    const std::size_t n = 4096;
    PmOneSource src(n);
    const TailSeriesReport rep =
        tail_series_couple(src, 3.0, {256, 1024, 4096}, RandomStream(65, 0));
    for (const auto& row : rep.rows) {
        double direct = 0.0;
        for (std::size_t k = n; k >= row.m; --k) direct += 1.0 / (static_cast<double>(k) * k);
        REQUIRE(row.delta2 == Catch::Approx(direct).margin(1e-12));
    }
}

TEST_CASE("tail series envelope ratio decreases with the checkpoint") {
    const std::size_t n = 1 << 12;
    const int reps = 60;
    std::vector<std::vector<double>> ratios(3, std::vector<double>(reps));
    parallel_replicas(reps, 4, [&](std::size_t r) {
        RandomStream rng(66, r);
        auto mf = doubling_mfun();
        MapMdsSource src(mf, n, mf->op().map().inv_cdf(rng.uniform_pos()));
        const TailSeriesReport rep = tail_series_couple(
            src, 4.0, {std::size_t{1} << 8, std::size_t{1} << 10, std::size_t{1} << 12},
            RandomStream(67, r));
        for (int c = 0; c < 3; ++c) ratios[c][r] = rep.rows[c].ratio;
    });
    const double m0 = median_of(ratios[0]);
    const double m2 = median_of(ratios[2]);
    REQUIRE(m2 < m0);
}

TEST_CASE("tail series with zero increments is identically zero") {
    ZeroSource src(64);
    const TailSeriesReport rep = tail_series_couple(src, 3.0, {8, 32}, RandomStream(68, 0));
    for (const auto& row : rep.rows) {
        REQUIRE(row.r_m == 0.0);
        REQUIRE(row.delta2 == 0.0);
        REQUIRE(row.err == 0.0);
    }
}

TEST_CASE("hanson-russo sup ratio sits in the desk-scale band") {
    std::vector<double> ratios(20);
    parallel_replicas(20, 4, [&](std::size_t r) {
        ratios[r] = hanson_russo_check(RandomStream(69, r), 1000, 100000).sup_ratio;
    });
    const double med = median_of(ratios);
    REQUIRE(med > 0.5);
    REQUIRE(med < 1.5);
}

TEST_CASE("hanson-russo ratio approaches one as the window grows") {
    auto median_ratio = [](std::size_t a, std::uint64_t seed) {
        std::vector<double> ratios(30);
        parallel_replicas(30, 4, [&](std::size_t r) {
            ratios[r] = hanson_russo_check(RandomStream(seed, r), a, 60 * a).sup_ratio;
        });
        return median_of(ratios);
    };
    const double m1 = median_ratio(200, 70);
    const double m2 = median_ratio(1200, 71);
    const double m3 = median_ratio(7200, 72);
    REQUIRE(std::fabs(m2 - 1.0) <= std::fabs(m1 - 1.0) + 0.05);
    REQUIRE(std::fabs(m3 - 1.0) <= std::fabs(m2 - 1.0) + 0.05);
}
