#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bridgex/error.hpp"
#include "bridgex/random.hpp"

namespace bridgex {

/// Uniform time grid on [t0, T] with n_steps intervals. The last node is
/// pinned to T exactly rather than accumulated.
class TimeGrid {
public:
    TimeGrid(double t0, double T, std::size_t n_steps);

    double t0() const noexcept { return t0_; }
    double T() const noexcept { return T_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t size() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return dt_; }
    double span() const noexcept { return T_ - t0_; }

    double operator[](std::size_t i) const noexcept {
        return i == n_steps_ ? T_ : t0_ + static_cast<double>(i) * dt_;
    }

    /// Index of the node nearest to t, clamped to [0, n_steps].
    std::size_t nearest(double t) const noexcept;

    std::vector<double> times() const;

private:
    double t0_;
    double T_;
    std::size_t n_steps_;
    double dt_;
};

/// Samples of a process on a TimeGrid.
struct Path {
    TimeGrid grid;
    std::vector<double> values;

    Path(TimeGrid g, std::vector<double> v);
    explicit Path(TimeGrid g) : Path(g, std::vector<double>(g.size(), 0.0)) {}

    std::size_t size() const noexcept { return values.size(); }
    double front() const noexcept { return values.front(); }
    double back() const noexcept { return values.back(); }
    std::size_t argmax() const noexcept;
    std::size_t argmin() const noexcept;
    double max() const noexcept { return values[argmax()]; }
    double min() const noexcept { return values[argmin()]; }
    bool all_finite() const noexcept;
};

/// Tabulated density on a uniform grid, with a trapezoidal cumulative table
/// normalized to end at exactly 1.
class DensityGrid {
public:
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t n_points() const noexcept { return density_.size(); }
    double step() const noexcept { return (hi_ - lo_) / static_cast<double>(density_.size() - 1); }
    double node(std::size_t i) const noexcept { return lo_ + static_cast<double>(i) * step(); }
    std::span<const double> densities() const noexcept { return density_; }
    std::span<const double> cumulative() const noexcept { return cumulative_; }

    /// Inverse CDF with linear interpolation of the cumulative table.
    double quantile(double u) const noexcept;

    /// Renormalized density (integrates to 1 under the trapezoid rule).
    double pdf(double x) const noexcept;
    double cdf(double x) const noexcept;

private:
    friend DensityGrid build_density_grid(const std::function<double(double)>&, double, double, std::size_t);
    friend DensityGrid build_density_grid_from_log(std::span<const double>, double, double);

    DensityGrid(double lo, double hi, std::vector<double> density);

    double lo_ = 0.0;
    double hi_ = 1.0;
    double mass_ = 1.0;
    std::vector<double> density_;
    std::vector<double> cumulative_;
};

DensityGrid build_density_grid(const std::function<double(double)>& f, double lo, double hi,
                               std::size_t n_points);

/// Same as build_density_grid but from log-density values at the uniform
/// nodes of [lo, hi]; values are shifted by their maximum before
/// exponentiation, so arbitrarily small unnormalized weights are fine.
DensityGrid build_density_grid_from_log(std::span<const double> log_density, double lo, double hi);

double sample_from_grid(const DensityGrid& grid, RandomSource& rng);

double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
/// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x) noexcept;
/// log(exp(a) + exp(b)) without overflow; -inf inputs allowed.
double log_add_exp(double a, double b) noexcept;
/// log(1 - exp(-x)) for x >= 0.
double log1mexp(double x) noexcept;

/// Composite Simpson rule; n_panels is rounded up to an even number.
double integrate(const std::function<double(double)>& f, double lo, double hi, std::size_t n_panels);

/// Adaptive Gauss-Kronrod (15-point) to the requested relative tolerance.
/// Throws QuadratureFailure when the error estimate stays above both the
/// relative tolerance and abs_tol.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double rel_tol = 1e-10, unsigned max_depth = 15, double abs_tol = 1e-14);

/// Midpoint-free Gauss-Legendre rule on [lo, hi]; endpoints never evaluated.
double integrate_open(const std::function<double(double)>& f, double lo, double hi, std::size_t n_panels);

/// Brent minimization on [lo, hi] to interval width tol.
double minimize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace bridgex
