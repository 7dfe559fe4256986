#include "bridgex/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace bridgex {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::total_mass_zero: return "TotalMassZero";
        case Errc::no_bracket: return "NoBracket";
        case Errc::degenerate_interval: return "DegenerateInterval";
        case Errc::invalid_extremum: return "InvalidExtremum";
        case Errc::infeasible_constraint: return "InfeasibleConstraint";
        case Errc::unstable_step: return "UnstableStep";
        case Errc::zero_denominator: return "ZeroDenominator";
        case Errc::infeasible_step: return "InfeasibleStep";
        case Errc::degenerate_scale: return "DegenerateScale";
        case Errc::domain_error: return "DomainError";
        case Errc::singular_block: return "SingularBlock";
        case Errc::quadrature_failure: return "QuadratureFailure";
        case Errc::insufficient_samples: return "InsufficientSamples";
        case Errc::config_error: return "ConfigError";
    }
    return "Unknown";
}

// ---------------------------------------------------------------- TimeGrid

TimeGrid::TimeGrid(double t0, double T, std::size_t n_steps) : t0_(t0), T_(T), n_steps_(n_steps) {
    require(std::isfinite(t0) && std::isfinite(T) && T > t0, Errc::invalid_argument,
            "time grid needs T > t0");
    require(n_steps >= 2, Errc::invalid_argument, "time grid needs n_steps >= 2");
    dt_ = (T - t0) / static_cast<double>(n_steps);
}

std::size_t TimeGrid::nearest(double t) const noexcept {
    double k = std::round((t - t0_) / dt_);
    if (!(k > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(k), n_steps_);
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*this)[i];
    return out;
}

// ---------------------------------------------------------------- Path

Path::Path(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.size(), Errc::invalid_argument, "path length does not match grid");
}

std::size_t Path::argmax() const noexcept {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::size_t Path::argmin() const noexcept {
    return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

bool Path::all_finite() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------- DensityGrid

namespace {

constexpr double kMinMass = 1e-300;

}  // namespace

DensityGrid::DensityGrid(double lo, double hi, std::vector<double> density)
    : lo_(lo), hi_(hi), density_(std::move(density)) {
    const std::size_t n = density_.size();
    const double h = (hi_ - lo_) / static_cast<double>(n - 1);
    cumulative_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cumulative_[i] = cumulative_[i - 1] + 0.5 * h * (density_[i - 1] + density_[i]);
    mass_ = cumulative_.back();
    if (!(mass_ >= kMinMass) || !std::isfinite(mass_)) {
        std::ostringstream os;
        os << "density has mass " << mass_ << " on [" << lo_ << ", " << hi_ << "]";
        fail(Errc::total_mass_zero, os.str());
    }
    for (auto& c : cumulative_) c /= mass_;
    cumulative_.back() = 1.0;
}

double DensityGrid::quantile(double u) const noexcept {
    if (u <= 0.0) return lo_;
    if (u >= 1.0) return hi_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cumulative_.begin());
    if (j == 0) return lo_;
    if (j >= cumulative_.size()) return hi_;
    const double c0 = cumulative_[j - 1];
    const double c1 = cumulative_[j];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return std::clamp(node(j - 1) + frac * step(), lo_, hi_);
}

double DensityGrid::pdf(double x) const noexcept {
    if (x < lo_ || x > hi_) return 0.0;
    const double pos = (x - lo_) / step();
    const std::size_t i = std::min(static_cast<std::size_t>(pos), density_.size() - 2);
    const double f = pos - static_cast<double>(i);
    return ((1.0 - f) * density_[i] + f * density_[i + 1]) / mass_;
}

double DensityGrid::cdf(double x) const noexcept {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const double pos = (x - lo_) / step();
    const std::size_t i = std::min(static_cast<std::size_t>(pos), density_.size() - 2);
    return std::clamp(cumulative_[i] + (x - node(i)) / mass_ * 0.5 * (density_[i] + pdf(x) * mass_),
                      0.0, 1.0);
}

DensityGrid build_density_grid(const std::function<double(double)>& f, double lo, double hi,
                               std::size_t n_points) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, Errc::invalid_argument,
            "density grid needs lo < hi");
    require(n_points >= 2, Errc::invalid_argument, "density grid needs at least 2 points");
    std::vector<double> d(n_points);
    const double h = (hi - lo) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = i + 1 == n_points ? hi : lo + static_cast<double>(i) * h;
        const double v = f(x);
        require(!(v < 0.0), Errc::invalid_argument, "density grid given a negative density value");
        d[i] = std::isfinite(v) ? v : 0.0;
    }
    return DensityGrid(lo, hi, std::move(d));
}

DensityGrid build_density_grid_from_log(std::span<const double> log_density, double lo, double hi) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, Errc::invalid_argument,
            "density grid needs lo < hi");
    require(log_density.size() >= 2, Errc::invalid_argument, "density grid needs at least 2 points");
    double top = -std::numeric_limits<double>::infinity();
    for (double v : log_density)
        if (!std::isnan(v)) top = std::max(top, v);
    if (!std::isfinite(top)) fail(Errc::total_mass_zero, "all log-density values are -inf");
    std::vector<double> d(log_density.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = std::isnan(log_density[i]) ? 0.0 : std::exp(log_density[i] - top);
    return DensityGrid(lo, hi, std::move(d));
}

double sample_from_grid(const DensityGrid& grid, RandomSource& rng) { return grid.quantile(rng.uniform()); }

// ---------------------------------------------------------------- normal

double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) noexcept {
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
    if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    // Mills-ratio asymptotic series; at |x| >= 30 six terms are far below
    // double resolution.
    const double z = 1.0 / (x * x);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 6; ++k) {
        term *= -static_cast<double>(2 * k - 1) * z;
        sum += term;
    }
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sum);
}

double log_add_exp(double a, double b) noexcept {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log1mexp(double x) noexcept {
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    return x < std::numbers::ln2 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

// ---------------------------------------------------------------- quadrature

double integrate(const std::function<double(double)>& f, double lo, double hi, std::size_t n_panels) {
    require(lo <= hi, Errc::invalid_argument, "integrate needs lo <= hi");
    if (lo == hi) return 0.0;
    std::size_t n = std::max<std::size_t>(n_panels, 2);
    if (n % 2) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double v = f(lo + static_cast<double>(i) * h);
        (i % 2 ? odd : even) += v;
    }
    return h / 3.0 * (f(lo) + 4.0 * odd + 2.0 * even + f(hi));
}

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
                          unsigned max_depth, double abs_tol) {
    if (lo == hi) return 0.0;
    double err = 0.0, l1 = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, max_depth, rel_tol, &err, &l1);
    if (!std::isfinite(v) || err > std::max(1e3 * rel_tol * l1, abs_tol)) {
        std::ostringstream os;
        os << "adaptive quadrature on [" << lo << ", " << hi << "] stalled at error " << err << " (L1 " << l1
           << ")";
        fail(Errc::quadrature_failure, os.str());
    }
    return v;
}

double integrate_open(const std::function<double(double)>& f, double lo, double hi, std::size_t n_panels) {
    require(lo <= hi, Errc::invalid_argument, "integrate_open needs lo <= hi");
    if (lo == hi) return 0.0;
    const std::size_t n = std::max<std::size_t>(n_panels, 1);
    const double h = (hi - lo) / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = lo + static_cast<double>(i) * h;
        total += boost::math::quadrature::gauss<double, 20>::integrate(f, a, a + h);
    }
    return total;
}

// ---------------------------------------------------------------- minimization

double minimize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol) {
    require(tol > 0.0, Errc::invalid_argument, "minimize_scalar needs tol > 0");
    const double flo = std::isfinite(lo) ? f(lo) : std::numeric_limits<double>::quiet_NaN();
    const double fhi = std::isfinite(hi) ? f(hi) : std::numeric_limits<double>::quiet_NaN();
    if (!(lo < hi) || !std::isfinite(flo) || !std::isfinite(fhi)) {
        std::ostringstream os;
        os << "cannot bracket a minimum on [" << lo << ", " << hi << "]";
        fail(Errc::no_bracket, os.str());
    }
    // Brent stops when the bracket is within 2*(eps*|x| + eps/4); choose eps so
    // that this is below tol over the whole interval.
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
    const double eps = tol / (4.0 * scale);
    const int bits = std::clamp(static_cast<int>(std::floor(1.0 - std::log2(eps))), 8,
                                std::numeric_limits<double>::digits / 2);
    std::uintmax_t iters = 500;
    auto [x, fx] = boost::math::tools::brent_find_minima(f, lo, hi, bits, iters);
    if (flo < fx) return lo;
    if (fhi < fx) return hi;
    return x;
}

}  // namespace bridgex
