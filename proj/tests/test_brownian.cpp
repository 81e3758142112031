#include <catch_amalgamated.hpp>

#include "asiplab/brownian.hpp"
#include "asiplab/stattests.hpp"

using namespace asiplab;

namespace {
std::vector<LawAtom> two_point() {
    return {{-0.5, 0.5, 0.0, -1}, {0.5, 0.5, 0.0, -1}};
}
}  // namespace

TEST_CASE("two-point embedding: clock matches E(tau) = ab") {
    // E(stop) = 1/4 for the +-1/2 coin at dt = 1e-4, within 2%
    const int reps = 10000;
    double clock_sum = 0.0;
    int ups = 0;
    for (int r = 0; r < reps; ++r) {
        BrownianGrid path(RandomStream(41, r));
        const EmbedResult res = embed_increment(path, two_point(), 400.0, 1e-4);
        clock_sum += res.stop_time;
        REQUIRE((res.value == 0.5 || res.value == -0.5));
        if (res.value > 0) ++ups;
    }
    const double mean_clock = clock_sum / reps;
    REQUIRE(mean_clock == Catch::Approx(0.25).epsilon(0.02));
    REQUIRE(std::fabs(ups / static_cast<double>(reps) - 0.5) < 0.02);
}

TEST_CASE("degenerate law embeds instantly") {
    BrownianGrid path(RandomStream(42, 0));
    std::vector<LawAtom> law = {{0.0, 1.0, 0.0, -1}};
    const EmbedResult res = embed_increment(path, law, 400.0, 1e-4);
    REQUIRE(res.stop_time == 0.0);
    REQUIRE(res.value == 0.0);
}

TEST_CASE("embedding rejects invalid laws") {
    BrownianGrid path(RandomStream(43, 0));
    std::vector<LawAtom> negw = {{-0.5, -0.1, 0.0, -1}, {0.5, 1.1, 0.0, -1}};
    REQUIRE_THROWS_AS(embed_increment(path, negw, 400.0, 1e-4), ConfigError);
    std::vector<LawAtom> uncentered = {{0.0, 0.5, 0.0, -1}, {1.0, 0.5, 0.0, -1}};
    REQUIRE_THROWS_AS(embed_increment(path, uncentered, 400.0, 1e-4), ConfigError);
}

TEST_CASE("three-atom law is realized with the right frequencies") {
    // {(-1, 1/2), (0, 1/4), (+2, 1/4)}: centered; chi^2 on realized counts
    std::vector<LawAtom> law = {{-1.0, 0.5, 0.0, -1}, {0.0, 0.25, 0.0, -1}, {2.0, 0.25, 0.0, -1}};
    const int reps = 10000;
    std::vector<double> counts(3, 0.0);
    double clock_sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        BrownianGrid path(RandomStream(44, r));
        const EmbedResult res = embed_increment(path, law, 400.0, 1e-4);
        clock_sum += res.stop_time;
        if (res.value < -0.5)
            counts[0] += 1;
        else if (res.value < 1.0)
            counts[1] += 1;
        else
            counts[2] += 1;
    }
    const Chi2Result chi = chi2_gof(counts, {0.5, 0.25, 0.25}, reps);
    REQUIRE(chi.pvalue > 0.01);
    // law variance = 0.5*1 + 0.25*0 + 0.25*4 = 1.5
    REQUIRE(clock_sum / reps == Catch::Approx(1.5).epsilon(0.03));
}

TEST_CASE("bracket exits land exactly on the barrier") {
    BrownianGrid path(RandomStream(45, 0));
    for (int i = 0; i < 50; ++i) {
        const double lo = path.b() - 0.3, hi = path.b() + 0.2;
        const ExitResult res = path.run_exit(lo, hi, 1e-4, nullptr);
        REQUIRE((path.b() == lo || path.b() == hi));
        REQUIRE(res.elapsed >= 0.0);
    }
}

TEST_CASE("deterministic recorder interpolates monotone times") {
    DetRecorder rec({0.5, 1.0, 2.5});
    rec.observe(0.0, 0.0, 2.0, 4.0);  // covers 0.5 and 1.0 linearly
    rec.observe(2.0, 4.0, 3.0, 1.0);
    REQUIRE(rec.done());
    REQUIRE(rec.values()[0] == Catch::Approx(1.0));
    REQUIRE(rec.values()[1] == Catch::Approx(2.0));
    REQUIRE(rec.values()[2] == Catch::Approx(2.5));
}

TEST_CASE("path increments over deterministic windows are standard normal") {
    RandomStream rng(46, 0);
    const std::size_t steps = 200000;
    std::vector<double> b = BrownianGrid::materialize(rng, steps);
    // window length 20 steps: standardized increments
    std::vector<double> z;
    for (std::size_t i = 20; i <= steps; i += 20) z.push_back((b[i] - b[i - 20]) / std::sqrt(20.0));
    const double d = ks_statistic(std::move(z), [](double x) { return normal_cdf(x); });
    REQUIRE(d < 1.7 * 1.628 / std::sqrt(steps / 20.0));
}
