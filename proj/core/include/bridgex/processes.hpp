#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bridgex/densities.hpp"
#include "bridgex/numerics.hpp"
#include "bridgex/random.hpp"

namespace bridgex {

/// dX = kappa (mu - X) dt + sigma dW
struct OUParams {
    double kappa = 1.0;
    double mu = 0.0;
    double sigma = 1.0;

    void validate() const;
};

/// Wiener process started at a.
template <NormalSource G>
Path gen_wiener(double a, double sigma, const TimeGrid& grid, G& rng) {
    Path p(grid);
    const double sd = sigma * std::sqrt(grid.dt());
    p.values[0] = a;
    for (std::size_t i = 1; i < p.size(); ++i) p.values[i] = p.values[i - 1] + sd * rng.normal();
    return p;
}

/// Brownian bridge from x1 to x2 over the grid, built as a + (b - a) s/T + W_s - W_T s/T.
template <NormalSource G>
Path gen_brownian_bridge(const BridgeEndpoints& ep, const TimeGrid& grid, G& rng) {
    ep.validate();
    Path p(grid);
    const std::size_t n = grid.n_steps();
    const double sd = ep.sigma * std::sqrt(grid.dt());
    std::vector<double> w(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) w[i] = w[i - 1] + sd * rng.normal();
    for (std::size_t i = 0; i <= n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n);
        p.values[i] = ep.x1 + (ep.x2 - ep.x1) * f + (w[i] - w[n] * f);
    }
    p.values.front() = ep.x1;
    p.values.back() = ep.x2;
    return p;
}

/// Drift of the OU bridge in the shifted variable (mean subtracted), with
/// r = time remaining to the end of the bridge and target the shifted end.
double ou_bridge_drift(const OUParams& p, double x_shifted, double target_shifted, double r) noexcept;

/// Euler-Maruyama OU path. Throws UnstableStep if kappa dt >= 1.
template <NormalSource G>
Path gen_ou(const OUParams& p, double a, const TimeGrid& grid, G& rng) {
    p.validate();
    const double dt = grid.dt();
    if (!(p.kappa * dt < 1.0)) fail(Errc::unstable_step, "kappa * dt must be below 1");
    Path out(grid);
    const double sd = p.sigma * std::sqrt(dt);
    out.values[0] = a;
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double x = out.values[i - 1];
        out.values[i] = x + p.kappa * (p.mu - x) * dt + sd * rng.normal();
    }
    return out;
}

/// Euler-Maruyama OU bridge from x1 to x2; the last node is set to x2.
template <NormalSource G>
Path gen_ou_bridge(const OUParams& p, const BridgeEndpoints& ep, const TimeGrid& grid, G& rng) {
    p.validate();
    const double dt = grid.dt();
    if (!(p.kappa * dt < 1.0)) fail(Errc::unstable_step, "kappa * dt must be below 1");
    Path out(grid);
    const double sd = p.sigma * std::sqrt(dt);
    const double target = ep.x2 - p.mu;
    double x = ep.x1 - p.mu;
    out.values[0] = ep.x1;
    for (std::size_t i = 1; i < grid.n_steps(); ++i) {
        const double r = grid.T() - grid[i - 1];
        x += ou_bridge_drift(p, x, target, r) * dt + sd * rng.normal();
        out.values[i] = p.mu + x;
    }
    out.values.back() = ep.x2;
    return out;
}

namespace detail {

/// Minimum over [tau, h] of a Brownian bridge from x to y over a step of
/// length h (variance var_rate per unit time), where tau is its first passage
/// of top and the passage is known to happen in the step. The step is halved
/// repeatedly, each midpoint drawn from the bridge law conditioned on the
/// passage (by rejection), following the half that holds the first passage
/// and folding in the exact minimum of each later half that is left behind.
template <class Normal, class Expo>
double post_passage_min(double x, double y, double h, double top, double var_rate, Normal& normal, Expo& expo) {
    auto log_cross = [&](double u, double v, double len) {
        return (u >= top || v >= top) ? 0.0 : -2.0 * (top - u) * (top - v) / (var_rate * len);
    };
    double low = std::min(top, y);
    for (int level = 0; level < 30; ++level) {
        const double half = 0.5 * h;
        double m = 0.0, p1 = 0.0, p_any = 0.0;
        for (;;) {
            m = 0.5 * (x + y) + std::sqrt(var_rate * half * 0.5) * normal();
            p1 = std::exp(log_cross(x, m, half));
            const double p2 = std::exp(log_cross(m, y, half));
            p_any = 1.0 - (1.0 - p1) * (1.0 - p2);
            if (y >= top || -expo() < std::log(p_any)) break;
        }
        if (-expo() < std::log(p1 / p_any)) {
            const double d = y - m;
            low = std::min(low, 0.5 * (m + y - std::sqrt(d * d + 2.0 * var_rate * half * expo())));
            y = m;
        } else {
            x = m;
        }
        h = half;
        low = std::min(low, std::min(top, y));
    }
    return low;
}

}  // namespace detail

/// Open-ended Wiener path started at a with maximum M, by reflecting a bridge
/// from a to M after its first passage of M.
///
/// The passage is located between nodes with the exact bridge crossing
/// probability and then inside its step by conditioned bisection; the running
/// minimum after it uses exact bridge minima, so no grid bias is left beyond
/// the bisection depth. A node at or above M - tol_hit also counts as the
/// passage. Every value stays at or below M. Exponential draws come from pairs
/// of normals so any NormalSource will do.
template <NormalSource G>
Path gen_wiener_open_max(double a, double M, double sigma, const TimeGrid& grid, G& rng, double tol_hit = 0.0) {
    if (!(M > a)) fail(Errc::infeasible_constraint, "open maximum needs M > a");
    const double top = M - a;
    const double var_rate = sigma * sigma;
    const double var = var_rate * grid.dt();
    auto normal = [&rng] { return static_cast<double>(rng.normal()); };
    auto expo = [&rng] {
        const double z1 = rng.normal(), z2 = rng.normal();
        return 0.5 * (z1 * z1 + z2 * z2);
    };
    Path br = gen_brownian_bridge(BridgeEndpoints{grid.t0(), grid.T(), 0.0, top, sigma}, grid, rng);
    auto& w = br.values;
    std::size_t k = 0;  // the passage happens in (t_k, t_{k+1}]
    for (;; ++k) {
        if (w[k + 1] >= top - tol_hit) break;  // terminates: w.back() == top
        const double log_cross = -2.0 * (top - w[k]) * (top - w[k + 1]) / var;
        if (-expo() < log_cross) break;
    }
    // A node inside the tolerance band but below M is taken as the passage itself.
    const bool by_tolerance = w[k + 1] < top && w[k + 1] >= top - tol_hit;
    double running_min = by_tolerance ? w[k + 1]
                                      : detail::post_passage_min(w[k], w[k + 1], grid.dt(), top, var_rate, normal, expo);
    std::vector<double> mins(w.size(), running_min);
    for (std::size_t j = k + 1; j + 1 < w.size(); ++j) {
        const double d = w[j + 1] - w[j];
        running_min = std::min(running_min, 0.5 * (w[j] + w[j + 1] - std::sqrt(d * d + 2.0 * var * expo())));
        mins[j + 1] = running_min;
    }
    for (std::size_t j = k + 1; j < w.size(); ++j) w[j] = 2.0 * mins[j] - w[j];
    for (auto& v : w) v += a;
    return br;
}

}  // namespace bridgex
