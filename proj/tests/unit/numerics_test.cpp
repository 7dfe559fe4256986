#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bridgex/error.hpp"
#include "bridgex/numerics.hpp"
#include "bridgex/random.hpp"
#include "oracles.hpp"

using namespace bridgex;

TEST_CASE("normal cdf") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(normal_cdf(10.0) - 1.0) < 1e-12);
    // Oracle: Gauss-Kronrod quadrature of the pdf from 0 to 1, plus one half.
    const double ref = 0.5 + oracle::integrate_smooth(oracle::phi, 0.0, 1.0);
    CHECK(normal_cdf(1.0) == doctest::Approx(ref).epsilon(1e-13));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.841344746068543).epsilon(1e-13));
    CHECK(log_normal_cdf(-40.0) == doctest::Approx(-800.0 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(40.0) + std::log(1 - 1 / 1600.0 + 3 / 2.56e6)).epsilon(1e-9));
}

TEST_CASE("log helpers") {
    CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
    CHECK(log_add_exp(-INFINITY, 1.5) == 1.5);
    CHECK(log1mexp(1e-20) == doctest::Approx(std::log(1e-20)));
    CHECK(log1mexp(30.0) == doctest::Approx(-std::exp(-30.0)).epsilon(1e-9));
}

TEST_CASE("time grid") {
    TimeGrid g(0.0, 2.0, 100);
    CHECK(g.size() == 101);
    CHECK(g.dt() == doctest::Approx(0.02));
    CHECK(g[100] == 2.0);
    CHECK(g.nearest(1.009) == 50);
    CHECK(g.nearest(1.011) == 51);
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 10), Error);
}

TEST_CASE("density grid construction") {
    SUBCASE("constant density gives a uniform grid") {
        const auto g = build_density_grid([](double) { return 1.0; }, 0.0, 1.0, 11);
        for (std::size_t i = 0; i < 11; ++i) CHECK(g.cumulative()[i] == doctest::Approx(i / 10.0).epsilon(1e-14));
    }
    SUBCASE("linear density has quadratic cdf at the nodes") {
        const auto g = build_density_grid([](double x) { return x; }, 0.0, 1.0, 101);
        for (std::size_t i = 0; i <= 100; i += 10) {
            const double x = g.node(i);
            CHECK(g.cdf(x) == doctest::Approx(x * x).epsilon(1e-12));
        }
    }
    SUBCASE("zero density is rejected") {
        try {
            build_density_grid([](double) { return 0.0; }, 0.0, 1.0, 11);
            FAIL("expected TotalMassZero");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::total_mass_zero);
        }
    }
    SUBCASE("log densities of -inf only are rejected") {
        std::vector<double> lg(8, -INFINITY);
        CHECK_THROWS_AS(build_density_grid_from_log(lg, 0.0, 1.0), Error);
    }
}

TEST_CASE("sampling from a density grid") {
    SUBCASE("uniform inverse cdf") {
        const auto g = build_density_grid([](double) { return 1.0; }, 0.0, 1.0, 11);
        CHECK(g.quantile(0.25) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(g.quantile(0.0) == 0.0);
        CHECK(g.quantile(1.0) == 1.0);
    }
    SUBCASE("mass concentrated in one cell") {
        const auto g = build_density_grid([](double x) { return std::abs(x - 0.55) < 0.051 ? 1.0 : 0.0; }, 0.0, 1.0, 21);
        RandomSource rng(3);
        for (int i = 0; i < 1000; ++i) {
            const double x = sample_from_grid(g, rng);
            CHECK((x >= 0.45 && x <= 0.65));
        }
    }
    SUBCASE("moment of f(x) = 2x") {
        const auto g = build_density_grid([](double x) { return 2.0 * x; }, 0.0, 1.0, 1001);
        RandomSource rng(11);
        const int n = 100000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += sample_from_grid(g, rng);
        // Var of the law is 1/18.
        CHECK(std::abs(s / n - 2.0 / 3.0) < 3.0 * std::sqrt(1.0 / 18.0 / n));
    }
}

TEST_CASE("quadrature") {
    CHECK(integrate([](double) { return 1.0; }, 0.0, 1.0, 2) == doctest::Approx(1.0));
    CHECK(integrate([](double x) { return x * x * x; }, 0.0, 1.0, 2) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 256) - 2.0) < 1e-8);
    CHECK(integrate_adaptive([](double x) { return std::exp(-x * x); }, -6.0, 6.0) ==
          doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-10));
    // Endpoint singularity handled by the open rule.
    CHECK(integrate_open([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 400) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("scalar minimization") {
    CHECK(minimize_scalar([](double x) { return (x - 2.0) * (x - 2.0); }, 0.0, 5.0, 1e-8) == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(std::abs(minimize_scalar([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-9) - 0.3) < 1e-7);

    // Lower cutoff of a unit-volatility drifted path (c = 1, T = 2): the
    // probability that the minimum falls below x, by the reflection formula.
    const double c = 1.0, T = 2.0, delta = 1e-3;
    auto p_min_below = [&](double x) {
        const double y = -x;
        return oracle::Phi((-y - c * T) / std::sqrt(T)) + std::exp(-2.0 * c * y) * oracle::Phi((-y + c * T) / std::sqrt(T));
    };
    const double xm = minimize_scalar([&](double x) { return std::abs(p_min_below(x) - delta); }, -10.0, 0.0, 1e-12);
    CHECK(std::abs(p_min_below(xm) - delta) <= 1e-6);
}
