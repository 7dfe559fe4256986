#include <doctest.h>

#include <cmath>
#include <random>

#include "bridgex/meander.hpp"
#include "bridgex/random.hpp"
#include "oracles.hpp"

using namespace bridgex;

namespace {
struct ZeroNoise {
    double normal() { return 0.0; }
};

double interior_var(const MeanderSpec& spec, std::size_t node, std::uint64_t seed) {
    const TimeGrid g(0.0, spec.T, 20);
    RandomSource rng(seed);
    double s = 0.0, s2 = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double v = gen_scaled_meander(spec, g, rng).values[node] - spec.a;
        s += v;
        s2 += v * v;
    }
    return s2 / n - (s / n) * (s / n);
}
}  // namespace

TEST_CASE("standard meander") {
    const TimeGrid g(0.0, 1.0, 50);
    ZeroNoise zn;
    const Path line = gen_standard_meander(0.8, g, zn);
    for (std::size_t i = 0; i < line.size(); ++i) CHECK(line.values[i] == doctest::Approx(0.8 * g[i]));

    RandomSource rng(4);
    const Path exc = gen_standard_meander(0.0, g, rng);
    CHECK(exc.front() == 0.0);
    CHECK(exc.back() == 0.0);
    for (double v : exc.values) CHECK(v >= 0.0);

    for (int k = 0; k < 10000; ++k) {
        const Path p = gen_standard_meander(1.0, g, rng);
        REQUIRE(p.back() == 1.0);
        REQUIRE(p.min() >= 0.0);
    }
}

TEST_CASE("scaled meander") {
    const TimeGrid g(0.0, 1.0, 30);
    RandomSource r1(17), r2(17);
    const Path a = gen_standard_meander(0.6, g, r1);
    const Path b = gen_scaled_meander(MeanderSpec{0.6, 1.0, 1.0, 0.0}, g, r2);
    CHECK(a.values == b.values);

    RandomSource rng(23);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    std::mt19937_64 gen(1);
    for (int k = 0; k < 1000; ++k) {
        const MeanderSpec s{u(gen), u(gen), u(gen), u(gen) - 1.5};
        const Path p = gen_scaled_meander(s, TimeGrid(0.0, s.T, 16), rng);
        REQUIRE(p.front() == s.a);
        REQUIRE(p.back() == s.a + s.r);
    }

    // Scaling: the spread of an interior node grows like sigma^2 T with r
    // held at the same standardized value.
    const double v1 = interior_var(MeanderSpec{0.5, 1.0, 1.0, 0.0}, 7, 100);
    const double v2 = interior_var(MeanderSpec{0.5 * 2.0 * std::sqrt(3.0), 3.0, 2.0, 1.0}, 7, 200);
    CHECK(v2 / v1 == doctest::Approx(4.0 * 3.0).epsilon(0.05));
}

TEST_CASE("argmax sampling") {
    RandomSource rng(41);
    SUBCASE("symmetric endpoints") {
        const BridgeEndpoints ep{0.0, 2.0, 1.0, 1.0, 1.0};
        const MeanderBridgeSampler s(ep, 2.0);
        const int n = 100000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = s.sample_argmax(rng);
            sum += t;
            sum2 += t * t;
        }
        const double m = sum / n, sd = std::sqrt(sum2 / n - m * m);
        CHECK(std::abs(m - 1.0) < 3.0 * sd / std::sqrt(double(n)));
    }
    SUBCASE("histogram against the passage-product form") {
        const BridgeEndpoints ep{0.0, 2.0, 3.0, 4.0, 1.0};
        const MeanderBridgeSampler s(ep, 5.0);
        std::vector<double> draws;
        for (int i = 0; i < 100000; ++i) draws.push_back(s.sample_argmax(rng));
        const auto probs = oracle::bin_masses([](double t) { return oracle::bridge_argmax(t, 2.0, 3.0, 4.0, 5.0, 1.0); }, 0.0, 2.0, 10);
        CHECK(oracle::chi_square(oracle::bin_counts(draws, 0.0, 2.0, 10), probs).p > 0.01);
    }
    SUBCASE("maximum barely above the higher end") {
        const BridgeEndpoints ep{0.0, 1.0, 0.0, 1.0, 1.0};
        const MeanderBridgeSampler s(ep, 1.01);
        int first = 0, last = 0;
        for (int i = 0; i < 20000; ++i) {
            const double t = s.sample_argmax(rng);
            first += t < 0.25;
            last += t > 0.75;
        }
        CHECK(last > 5 * first);
        const double mass_last = oracle::integrate([](double t) { return oracle::bridge_argmax(t, 1.0, 0.0, 1.0, 1.01, 1.0); }, 0.75, 1.0);
        CHECK(last / 20000.0 == doctest::Approx(mass_last).epsilon(0.05));
    }
}

TEST_CASE("bridge with a given maximum from meanders") {
    const BridgeEndpoints ep{0.0, 1.0, 1.0, 3.0, 1.0};
    const TimeGrid g(0.0, 1.0, 100);
    RandomSource rng(2);
    const MeanderBridgeSampler s(ep, 5.0);
    std::vector<double> argmax;
    for (int i = 0; i < 1000; ++i) {
        const Path p = s.generate(g, rng);
        REQUIRE(p.front() == 1.0);
        REQUIRE(p.back() == 3.0);
        const std::size_t k = p.argmax();
        REQUIRE(p.values[k] == 5.0);
        for (std::size_t j = 0; j < p.size(); ++j)
            if (j != k) REQUIRE(p.values[j] < 5.0);
        argmax.push_back(g[k]);
    }
    const auto probs = oracle::bin_masses([](double t) { return oracle::bridge_argmax(t, 1.0, 1.0, 3.0, 5.0, 1.0); }, 0.0, 1.0, 10);
    CHECK(oracle::chi_square(oracle::bin_counts(argmax, 0.0, 1.0, 10), probs).p > 0.01);

    RandomSource r3(5);
    const Path direct = gen_bridge_with_max_meander(ep, 5.0, g, r3);
    CHECK(direct.max() == 5.0);
}
