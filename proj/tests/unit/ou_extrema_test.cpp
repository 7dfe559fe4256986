#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "bridgex/bayesian.hpp"
#include "bridgex/densities.hpp"
#include "bridgex/ou_extrema.hpp"
#include "bridgex/random.hpp"
#include "oracles.hpp"

using namespace bridgex;

namespace {
// Kernel written out from its definition, without the 1/sqrt(th - th') part.
double kernel(double b, double th, double tp) {
    const double s = 2.0 - th - tp;
    return std::exp(-b * b * (th - tp) / s) * (1.0 - tp) / std::pow(s, 1.5);
}

/// Residual of nu(th) = 1 + (2b/sqrt(pi)) int_0^th K nu / sqrt(th - th'),
/// integrated with u^2 = th - th' to remove the singularity.
double residual(const VolterraSolution& sol, double th) {
    const double b = sol.b;
    auto g = [&](double u) {
        const double tp = th - u * u;
        return 2.0 * kernel(b, th, tp) * sol(tp);
    };
    const double I = oracle::integrate_smooth(g, 0.0, std::sqrt(th));
    return sol(th) - 1.0 - 2.0 * b / std::sqrt(std::numbers::pi) * I;
}
}  // namespace

TEST_CASE("normalized coordinates round trip") {
    const NormalizedOUCoords nc(OUParams{2.5, 0.3, 0.7});
    for (double x : {-3.0, 0.0, 0.3, 4.2}) CHECK(nc.unlevel(nc.level(x)) == doctest::Approx(x).epsilon(1e-12));
    CHECK(nc.untime(nc.time(1.7)) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(nc.level(0.3) == 0.0);
}

TEST_CASE("scale function and speed density") {
    const auto sp = scale_and_speed(OUParams{1.5, 0.2, 0.8});
    CHECK(sp.S(0.0) == 0.0);
    double prev = sp.S(-2.0);
    for (int i = 1; i <= 1000; ++i) {
        const double x = -2.0 + 4.0 * i / 1000.0;
        const double v = sp.S(x);
        REQUIRE(v > prev);
        prev = v;
    }
    for (double x : {-1.0, 0.5, 1.3}) CHECK(sp.m(x) > 0.0);

    const double k = 1e-6;
    const auto tiny = scale_and_speed(OUParams{k, 0.0, 1.0});
    for (double x : {-2.0, -0.5, 0.7, 2.0}) {
        CHECK(std::abs(tiny.S(x) - x) < 10.0 * k);
        CHECK(std::abs(tiny.m(x) - 2.0) < 10.0 * k);
    }
}

TEST_CASE("product integration weights") {
    auto defining = [](double x, double y, double z) {
        auto one = [&](auto L) {
            return oracle::integrate([&](double s) { return z * L(s) / std::sqrt(x - y - s * z); }, 0.0, 2.0);
        };
        return std::array<double, 3>{one([](double s) { return 0.5 * (1 - s) * (2 - s); }),
                                     one([](double s) { return s * (2 - s); }),
                                     one([](double s) { return 0.5 * s * (s - 1); })};
    };
    const auto q = defining(1.0, 0.1, 0.2);
    const auto w = volterra_abc(1.0, 0.1, 0.2);
    CHECK(std::abs(w.alpha - q[0]) < 1e-8);
    CHECK(std::abs(w.beta - q[1]) < 1e-8);
    CHECK(std::abs(w.gamma - q[2]) < 1e-8);

    // Far from the singularity the series branch is used; same oracle.
    const auto qf = defining(3.0, 0.1, 0.01);
    const auto wf = volterra_abc(3.0, 0.1, 0.01);
    CHECK(std::abs(wf.alpha - qf[0]) < 1e-12);
    CHECK(std::abs(wf.beta - qf[1]) < 1e-12);
    CHECK(std::abs(wf.gamma - qf[2]) < 1e-12);

    const auto w0 = volterra_abc(1.0, 0.2, 1e-14);
    CHECK(std::abs(w0.alpha) + std::abs(w0.beta) + std::abs(w0.gamma) < 1e-12);

    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double z = 0.01 + 0.2 * u(gen);
        const double y = u(gen);
        const double x = y + 2.0 * z + u(gen);
        const auto v = volterra_abc(x, y, z);
        const double sum = oracle::integrate([&](double s) { return z / std::sqrt(x - y - s * z); }, 0.0, 2.0);
        CHECK(v.alpha + v.beta + v.gamma == doctest::Approx(sum).epsilon(1e-10));
    }
    CHECK_THROWS(volterra_abc(0.1, 0.2, 0.1));
}

TEST_CASE("composite weights") {
    const double h = 0.01;
    std::vector<double> nodes(20);
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = h * i;
    const std::size_t n = 8;
    const std::size_t upper = 2 * ((n - 1) / 2);
    // First node of the rule: only the alpha term of the first block.
    CHECK(volterra_weights(n, 0, h, nodes) == doctest::Approx(volterra_abc(nodes[n], 0.0, h).alpha));
    // Last node of the rule: only the gamma term of the last block.
    CHECK(volterra_weights(n, upper, h, nodes) == doctest::Approx(volterra_abc(nodes[n], nodes[upper] - 2 * h, h).gamma));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += volterra_weights(n, i, h, nodes);
    const double tn = nodes[n], tu = nodes[upper];
    CHECK(sum == doctest::Approx(2.0 * (std::sqrt(tn) - std::sqrt(tn - tu))).epsilon(1e-3));
}

TEST_CASE("volterra solver") {
    const auto coarse = solve_volterra_nu(1.0, 0.5, 200);
    const auto fine = solve_volterra_nu(1.0, 0.5, 400);
    CHECK(coarse.F[0] == 1.0);
    double drift = 0.0;
    for (std::size_t i = 0; i < coarse.F.size(); ++i) drift = std::max(drift, std::abs(coarse.F[i] - fine.F[2 * i]));
    CHECK(drift < 1e-3);
    double worst = 0.0;
    for (std::size_t i = 1; i < coarse.nodes.size(); i += 7) worst = std::max(worst, std::abs(residual(coarse, coarse.nodes[i])));
    CHECK(worst < 1e-2);

    // Negative b (the sign used for upward passage).
    const auto neg = solve_volterra_nu(-1.5, 0.9, 300);
    double worst_neg = 0.0;
    for (std::size_t i = 1; i < neg.nodes.size(); i += 11) worst_neg = std::max(worst_neg, std::abs(residual(neg, neg.nodes[i])));
    CHECK(worst_neg < 1e-2);

    std::ostringstream os;
    coarse.write_csv(os);
    CHECK(os.str().rfind("theta,F\n0,1\n", 0) == 0);
}

TEST_CASE("small-time approximation") {
    CHECK(nu_abel_approx(0.0, 0.7) == doctest::Approx(1.0));
    for (double th : {0.01, 0.3, 0.9}) CHECK(nu_abel_approx(th, 0.0) == doctest::Approx(1.0));
    const auto sol = solve_volterra_nu(0.5, 0.05, 200);
    for (double th = 0.005; th <= 0.05; th += 0.005) CHECK(nu_abel_approx(th, 0.5) == doctest::Approx(sol(th)).epsilon(0.05));
}

TEST_CASE("first passage density of the normalized process") {
    const auto nu = nu_for_level(1.0, 1.0 - std::exp(-3.0) + 1e-3, NuMethod::volterra, 800);
    CHECK(hitting_time_density(1e-4, 0.0, 1.0, nu) < 1e-8);

    double partial = 0.0, prev = 0.0;
    for (int k = 1; k <= 6; ++k) {
        partial += oracle::integrate([&](double t) { return hitting_time_density(t, 0.0, 1.0, nu); }, 0.5 * (k - 1), 0.5 * k);
        CHECK(partial >= prev);
        prev = partial;
    }
    CHECK(partial <= 1.0 + 1e-6);
    CHECK(partial == doctest::Approx(1.0 - ou_survival(3.0, 0.0, 1.0, nu)).epsilon(1e-4));

    // Monte Carlo: exact transitions with a bridge crossing correction per step.
    std::mt19937_64 gen(2024);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n_paths = 20000;
    const double dt = 1e-3, T_big = 3.0;
    const double decay = std::exp(-dt), sd = std::sqrt(0.5 * (1.0 - std::exp(-2.0 * dt)));
    std::vector<double> times;
    int survivors = 0;
    for (int k = 0; k < n_paths; ++k) {
        double x = 0.0, t = 0.0;
        bool hit = false;
        while (t < T_big - 1e-12) {
            const double y = x * decay + sd * z(gen);
            const double p_cross = y >= 1.0 ? 1.0 : std::exp(-2.0 * (1.0 - x) * (1.0 - y) / dt);
            if (u(gen) < p_cross) {
                times.push_back(t + 0.5 * dt);
                hit = true;
                break;
            }
            x = y;
            t += dt;
        }
        survivors += !hit;
    }
    const std::size_t bins = 20;
    std::vector<double> probs(bins + 1);
    for (std::size_t i = 0; i < bins; ++i)
        probs[i] = oracle::integrate([&](double t) { return hitting_time_density(t, 0.0, 1.0, nu); }, T_big * i / bins,
                                     T_big * (i + 1) / bins);
    probs[bins] = ou_survival(T_big, 0.0, 1.0, nu);
    auto counts = oracle::bin_counts(times, 0.0, T_big, bins);
    counts.push_back(survivors);
    CHECK(oracle::chi_square(counts, probs).p > 0.01);
}

TEST_CASE("maximum of the OU bridge") {
    const OUParams p{1.0, 0.0, 1.0};
    const BridgeEndpoints ep{0.0, 1.0, 0.0, 0.0, 1.0};
    // Each evaluation solves a Volterra equation, so a fixed rule keeps this cheap.
    auto f = [&](double m) { return ou_max_density(m, ep, p, OUMode::bridge); };
    using GL = boost::math::quadrature::gauss<double, 30>;
    const double mass = GL::integrate(f, 0.0, 1.2) + GL::integrate(f, 1.2, 4.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(ou_max_density(0.8, ep, p, OUMode::bridge) >= 0.0);

    const OUParams slow{1e-3, 0.0, 1.0};
    for (int i = 1; i <= 10; ++i) {
        const double m = 0.15 * i;
        CHECK(ou_max_density(m, ep, slow, OUMode::bridge) == doctest::Approx(bb_max_density(m, ep)).epsilon(0.05));
    }

    // Exact OU bridge on a fine grid by Gaussian conditioning, maxima with a
    // per-step bridge correction.
    std::mt19937_64 gen(11);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 1000, n_paths = 20000;
    const double dt = 1.0 / n;
    const double decay = std::exp(-dt), sd = std::sqrt(0.5 * (1.0 - std::exp(-2.0 * dt)));
    std::vector<double> kfac(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double t = i * dt;
        kfac[i] = std::exp(-(1.0 - t)) * (1.0 - std::exp(-2.0 * t)) / (1.0 - std::exp(-2.0));
    }
    std::vector<double> x(n + 1), maxima;
    for (int k = 0; k < n_paths; ++k) {
        x[0] = 0.0;
        for (int i = 1; i <= n; ++i) x[i] = x[i - 1] * decay + sd * z(gen);
        const double xT = x[n];
        double mx = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = x[i] - kfac[i] * xT, b = x[i + 1] - kfac[i + 1] * xT;
            mx = std::max(mx, oracle::step_max(a, b, dt, 1.0 - u(gen)));
        }
        maxima.push_back(mx);
    }
    const std::size_t bins = 10;
    const double top = 2.0;
    std::vector<double> probs(bins + 1);
    double prev = 0.0;
    for (std::size_t i = 1; i <= bins; ++i) {
        const double c = ou_max_bound_prob(top * i / bins, ep, p, OUMode::bridge);
        probs[i - 1] = c - prev;
        prev = c;
    }
    probs[bins] = 1.0 - prev;
    auto counts = oracle::bin_counts(maxima, 0.0, top, bins);
    double over = 0.0;
    for (double m : maxima) over += m >= top;
    counts.back() -= over;
    counts.push_back(over);
    CHECK(oracle::chi_square(counts, probs).p > 0.01);
}

TEST_CASE("OU dynamics adapter") {
    const OUParams p{1.0, 0.2, 0.8};
    const OUDynamics dyn(p);
    const double dt = 0.02, w = 10.0 * p.sigma * std::sqrt(dt);
    for (std::optional<double> b : {std::optional<double>(0.5), std::optional<double>()}) {
        const double mass = oracle::integrate_smooth([&](double d) { return dyn.density_increment(d, 0.3, dt, 0.1, 1.0, b); }, -w, w);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
    const OUDynamics slow(OUParams{1e-9, 0.0, 1.0});
    const BridgeEndpoints ep{0.0, 1.0, 0.0, 0.4, 1.0};
    for (int i = 0; i < 10; ++i) {
        const double dX = -0.3 + 0.06 * i;
        CHECK(slow.density_increment(dX, 0.25, dt, 0.1, 1.0, 0.4) ==
              doctest::Approx(bb_increment_density(dX, 0.25, dt, 0.1, ep)).epsilon(1e-6));
    }
    CHECK(dyn.prob_bound(60.0, 0.0, 1.0, 0.0, 0.1) == doctest::Approx(1.0));
    CHECK(dyn.prob_bound(60.0, 0.0, 1.0, 0.0, std::nullopt) == doctest::Approx(1.0));
}

TEST_CASE("OU bridge with a given maximum end to end") {
    const auto dyn = ou_dynamics(OUParams{1.0, 0.0, 1.0});
    ConstraintSpec s;
    s.t0 = 0.0;
    s.T = 1.0;
    s.a = 0.0;
    s.b = 0.0;
    s.M = 1.0;
    NumericsConfig cfg;
    cfg.n_timesteps = 50;
    cfg.L = 256;
    cfg.epsilon = 0.2;
    int near = 0;
    const int runs = 100;
    for (int i = 0; i < runs; ++i) {
        RandomSource rng = RandomSource::for_path(9, i);
        const Path path = gen_constrained_bayesian(s, *dyn, cfg, rng);
        REQUIRE(path.max() <= 1.0);
        REQUIRE(path.back() == 0.0);
        near += path.max() >= 1.0 - cfg.epsilon;
    }
    CHECK(near >= 0.95 * runs);
}
