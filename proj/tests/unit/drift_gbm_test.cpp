#include <doctest.h>

#include <cmath>

#include "bridgex/drift_gbm.hpp"
#include "bridgex/random.hpp"
#include "oracles.hpp"

using namespace bridgex;

TEST_CASE("drift dynamics") {
    const DriftDynamics zero(DriftParams{0.0, 1.3});
    const BrownianDynamics bm(1.3);
    for (double x : {-1.0, 0.2, 0.9}) {
        CHECK(zero.log_prob_bound(1.0, 0.2, 1.4, x, std::nullopt) ==
              doctest::Approx(bm.log_prob_bound(1.0, 0.2, 1.4, x, std::nullopt)).epsilon(1e-12));
        CHECK(zero.log_density_max(1.0, 0.2, 1.4, x, 0.5) ==
              doctest::Approx(bm.log_density_max(1.0, 0.2, 1.4, x, 0.5)).epsilon(1e-12));
    }

    const DriftDynamics d(DriftParams{0.8, 1.0});
    const double dt = 0.05, w = 10.0 * std::sqrt(dt);
    const double mean = oracle::integrate_smooth(
        [&](double dx) { return dx * d.density_increment(dx, 0.0, dt, 0.0, 2.0, std::nullopt); }, -w, w);
    CHECK(mean == doctest::Approx(0.8 * dt).epsilon(1e-8));

    // Density of the max over the rest of an open horizon integrates to one.
    const double mass = oracle::integrate_smooth(
        [&](double m) { return d.density_max(m, 0.5, 2.0, 0.0, std::nullopt); }, 0.0, 30.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("open drifted path with a given maximum") {
    const DriftParams p{1.0, 2.0};
    NumericsConfig cfg;
    cfg.n_timesteps = 100;
    cfg.epsilon = 0.1;
    cfg.L = 1000;
    int near = 0;
    const int runs = 100;
    for (int i = 0; i < runs; ++i) {
        RandomSource rng = RandomSource::for_path(20240, i);
        const Path path = gen_drift_open_with_max(3.0, 6.0, p, 2.0, cfg, rng);
        REQUIRE(path.front() == 3.0);
        REQUIRE(path.max() <= 6.0);
        near += path.max() >= 6.0 - cfg.epsilon;
    }
    MESSAGE("attained within epsilon: " << near << " of " << runs);
    CHECK(near > 0);

    // A bound far above anything reachable leaves the drift alone.
    NumericsConfig loose = cfg;
    loose.bound_only = true;
    double sum = 0.0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        RandomSource rng = RandomSource::for_path(3, i);
        sum += gen_drift_open_with_max(0.0, 200.0, DriftParams{1.0, 1.0}, 2.0, loose, rng).back();
    }
    // The last node repeats the one before it.
    const double expect = 1.0 * (2.0 - 2.0 / 100.0);
    CHECK(std::abs(sum / n - expect) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("argmax of the open drifted path with the branch coin") {
    const DriftParams p{1.0, 2.0};
    NumericsConfig cfg;
    cfg.n_timesteps = 100;
    cfg.L = 400;
    cfg.sample_branch = true;
    std::vector<double> th;
    for (int i = 0; i < 400; ++i) {
        RandomSource rng = RandomSource::for_path(77, i);
        const Path path = gen_drift_open_with_max(3.0, 6.0, p, 2.0, cfg, rng);
        th.push_back(path.grid[path.argmax()]);
    }
    const auto probs =
        oracle::bin_masses([&](double t) { return drift_argmax_density_given_max(t, 3.0, 2.0, p); }, 0.0, 2.0, 10);
    CHECK(oracle::chi_square(oracle::bin_counts(th, 0.0, 2.0, 10), probs).p > 0.01);
}

TEST_CASE("argmax density given the maximum") {
    const DriftParams p{1.0, 2.0};
    const double mass = oracle::integrate([&](double t) { return drift_argmax_density_given_max(t, 3.0, 2.0, p); }, 0.0, 2.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    // Without drift it is a bridge-free product: passage to M, then a
    // remainder that stays below its start.
    const DriftParams z{0.0, 1.0};
    const double norm = oracle::integrate(
        [](double t) { return oracle::passage(t, 1.0, 1.0) / std::sqrt(2.0 - t); }, 0.0, 2.0);
    for (double t : {0.3, 1.0, 1.7})
        CHECK(drift_argmax_density_given_max(t, 1.0, 2.0, z) ==
              doctest::Approx(oracle::passage(t, 1.0, 1.0) / std::sqrt(2.0 - t) / norm).epsilon(1e-3));
}

TEST_CASE("drifted bridge with a given maximum") {
    const BridgeEndpoints ep{0.0, 2.0, 3.0, 4.0, 2.0};
    const TimeGrid g(0.0, 2.0, 100);
    RandomSource r1(5), r2(5);
    const Path a = gen_bridge_with_max_drift(ep, 6.0, 0.0, g, r1);
    const Path b = gen_bridge_with_max_drift(ep, 6.0, 7.0, g, r2);
    CHECK(a.values == b.values);
    CHECK(a.front() == 3.0);
    CHECK(a.back() == 4.0);
    CHECK(a.max() == 6.0);
}

TEST_CASE("geometric brownian motion with a given maximum") {
    NumericsConfig cfg;
    cfg.n_timesteps = 100;
    cfg.epsilon = 0.1;
    cfg.L = 1000;
    SUBCASE("bridge") {
        GBMParams p;
        p.c = 0.5;
        p.sigma = 0.5;
        p.a = 3.0;
        p.b = 4.0;
        p.M = 6.0;
        for (int i = 0; i < 50; ++i) {
            RandomSource rng = RandomSource::for_path(1, i);
            const Path path = gen_gbm_with_max(p, 2.0, cfg, rng);
            REQUIRE(path.min() > 0.0);
            REQUIRE(path.front() == doctest::Approx(3.0).epsilon(1e-14));
            REQUIRE(path.back() == doctest::Approx(4.0).epsilon(1e-14));
            REQUIRE(path.max() == doctest::Approx(6.0).epsilon(1e-14));
        }
        // The log of the path is a Brownian bridge with max log 6, so the
        // argmax is the same as for the log-level Method 1 path.
        RandomSource r1(8), r2(8);
        const Path g = gen_gbm_with_max(p, 2.0, cfg, r1);
        const Path l = gen_bridge_with_max_drift(BridgeEndpoints{0.0, 2.0, std::log(3.0), std::log(4.0), 0.5},
                                                 std::log(6.0), 0.0, TimeGrid(0.0, 2.0, 100), r2);
        CHECK(g.argmax() == l.argmax());
    }
    SUBCASE("open across volatilities") {
        for (double sigma : {0.1, 0.5, 1.0}) {
            GBMParams p;
            p.c = 0.5;
            p.sigma = sigma;
            p.a = 3.0;
            p.M = 6.0;
            for (int i = 0; i < 20; ++i) {
                RandomSource rng = RandomSource::for_path(2, i);
                const Path path = gen_gbm_with_max(p, 2.0, cfg, rng);
                REQUIRE(path.min() > 0.0);
                REQUIRE(path.front() == doctest::Approx(3.0).epsilon(1e-14));
                REQUIRE(path.max() <= 6.0 * (1.0 + 1e-12));
            }
        }
    }
    SUBCASE("bad levels") {
        GBMParams p;
        p.a = -1.0;
        RandomSource rng(0);
        CHECK_THROWS(gen_gbm_with_max(p, 1.0, cfg, rng));
    }
}
