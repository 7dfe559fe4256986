#include <doctest.h>

#include <cmath>
#include <random>

#include "bridgex/processes.hpp"
#include "bridgex/random.hpp"
#include "oracles.hpp"

using namespace bridgex;

namespace {
struct ZeroNoise {
    double normal() { return 0.0; }
};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

/// 3-sigma band for a sample variance of normal data.
bool var_close(double sample, double truth, std::size_t n) {
    return std::abs(sample - truth) < 3.0 * truth * std::sqrt(2.0 / static_cast<double>(n - 1));
}
}  // namespace

TEST_CASE("wiener") {
    const TimeGrid g(0.0, 2.0, 50);
    ZeroNoise zn;
    for (double v : gen_wiener(1.5, 3.0, g, zn).values) CHECK(v == 1.5);

    RandomSource rng(5);
    std::vector<double> ends;
    for (int i = 0; i < 10000; ++i) ends.push_back(gen_wiener(1.0, 0.7, g, rng).back() - 1.0);
    CHECK(var_close(var(ends), 0.49 * 2.0, ends.size()));

    RandomSource r1(9, 4), r2(9, 4);
    CHECK(gen_wiener(0.0, 1.0, g, r1).values == gen_wiener(0.0, 1.0, g, r2).values);
}

TEST_CASE("brownian bridge") {
    const TimeGrid g(0.0, 2.0, 40);
    const BridgeEndpoints ep{0.0, 2.0, 3.0, 4.0, 1.5};
    ZeroNoise zn;
    const Path line = gen_brownian_bridge(ep, g, zn);
    for (std::size_t i = 0; i < line.size(); ++i) CHECK(line.values[i] == doctest::Approx(3.0 + g[i] / 2.0));

    RandomSource rng(6);
    std::vector<double> mid;
    std::vector<double> sums(41, 0.0);
    const BridgeEndpoints z{0.0, 2.0, 0.0, 0.0, 1.5};
    for (int i = 0; i < 10000; ++i) {
        const Path p = gen_brownian_bridge(z, g, rng);
        mid.push_back(p.values[20]);
        for (std::size_t k = 0; k < 41; ++k) sums[k] += p.values[k];
        CHECK(p.front() == 0.0);
        CHECK(p.back() == 0.0);
    }
    CHECK(var_close(var(mid), 1.5 * 1.5 * 2.0 / 4.0, mid.size()));
    for (std::size_t k = 1; k < 40; ++k) {
        const double t = g[k];
        const double sd = 1.5 * std::sqrt(t * (2.0 - t) / 2.0 / 10000.0);
        CHECK(std::abs(sums[k] / 10000.0) < 4.0 * sd);
    }
}

TEST_CASE("ornstein-uhlenbeck paths") {
    ZeroNoise zn;
    const TimeGrid g(0.0, 1.0, 1000);
    for (double v : gen_ou(OUParams{2.0, 0.5, 1.0}, 0.5, g, zn).values) CHECK(v == doctest::Approx(0.5));
    const Path decay = gen_ou(OUParams{2.0, 0.5, 1.0}, 1.5, g, zn);
    for (std::size_t i = 1; i < decay.size(); ++i) CHECK(decay.values[i] < decay.values[i - 1]);
    CHECK(decay.back() - 0.5 == doctest::Approx(std::exp(-2.0)).epsilon(2.0 * 2.0 * g.dt()));

    // Stationary variance sigma^2 / (2 kappa) at a long horizon.
    RandomSource rng(21);
    const OUParams p{1.0, 0.0, 1.0};
    const TimeGrid long_g(0.0, 12.0, 1200);
    std::vector<double> ends;
    for (int i = 0; i < 10000; ++i) ends.push_back(gen_ou(p, 0.0, long_g, rng).back());
    CHECK(var(ends) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("ornstein-uhlenbeck bridges") {
    const TimeGrid g(0.0, 1.0, 200);
    const BridgeEndpoints ep{0.0, 1.0, 0.3, -0.4, 1.0};
    ZeroNoise zn;
    const Path det = gen_ou_bridge(OUParams{1.0, 0.2, 1.0}, ep, g, zn);
    CHECK(det.front() == 0.3);
    CHECK(det.back() == -0.4);
    for (std::size_t i = 1; i < det.size(); ++i) CHECK(det.values[i] <= det.values[i - 1] + 1e-12);

    RandomSource rng(8);
    std::vector<double> mid;
    const BridgeEndpoints z{0.0, 1.0, 0.0, 0.0, 1.0};
    for (int i = 0; i < 10000; ++i) {
        const Path p = gen_ou_bridge(OUParams{1e-6, 0.0, 1.0}, z, g, rng);
        CHECK(p.back() == 0.0);
        mid.push_back(p.values[100]);
    }
    CHECK(var(mid) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("open path with a given maximum by reflection") {
    const TimeGrid g(0.0, 1.0, 400);
    const double sigma = 1.0;
    RandomSource rng(31);
    for (int k = 0; k < 200; ++k) {
        const Path p = gen_wiener_open_max(0.0, 1.0, sigma, g, rng);
        CHECK(p.front() == 0.0);
        CHECK(p.max() <= 1.0);
        CHECK(p.max() >= 1.0 - 4.0 * sigma * std::sqrt(g.dt()));
    }
    ZeroNoise zn;
    const Path flat = gen_wiener_open_max(0.0, 1.0, sigma, g, zn);
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat.values[i] == doctest::Approx(g[i]));

    // Terminal law against a rejection oracle: unconditioned paths with
    // continuous maximum within 0.01 of the level.
    std::mt19937_64 gen(77);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> oracle_ends;
    const int n_steps = 100;
    const double dt = 1.0 / n_steps;
    while (oracle_ends.size() < 2000) {
        double x = 0.0, mx = 0.0;
        for (int i = 0; i < n_steps; ++i) {
            const double y = x + std::sqrt(dt) * z(gen);
            mx = std::max(mx, oracle::step_max(x, y, dt, 1.0 - u(gen)));
            x = y;
        }
        if (std::abs(mx - 1.0) <= 0.01) oracle_ends.push_back(x);
    }
    std::vector<double> ends;
    for (int k = 0; k < 2000; ++k) ends.push_back(gen_wiener_open_max(0.0, 1.0, sigma, g, rng).back());
    CHECK(oracle::ks_p(ends, oracle_ends) > 0.01);
}
