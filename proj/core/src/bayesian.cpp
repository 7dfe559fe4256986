#include "bridgex/bayesian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace bridgex {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-300;

double log_gaussian(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
}

/// Numerator of the conditioned increment law, in logs, excluding the
/// constant normalizer of the step.
double log_step_weight(double dX, double t, double dt, double x, const ConstraintSpec& spec, const Dynamics& dyn,
                       bool attained, bool attained_sum) {
    const double x_next = x + dX;
    if (x_next > spec.M) return kNegInf;
    const double t_next = t + dt;
    const double inc = dyn.log_density_increment(dX, t, dt, x, spec.T, spec.b);
    if (inc == kNegInf) return kNegInf;
    const double bound_left = dyn.log_prob_bound(spec.M, t, t_next, x, x_next);
    const double bound_right = dyn.log_prob_bound(spec.M, t_next, spec.T, x_next, spec.b);
    if (attained) {
        if (attained_sum) return inc + log_add_exp(bound_left, bound_right);
        return inc + bound_left + bound_right;
    }
    const double max_left = dyn.log_density_max(spec.M, t, t_next, x, x_next);
    const double max_right = dyn.log_density_max(spec.M, t_next, spec.T, x_next, spec.b);
    return inc + log_add_exp(max_left + bound_right, bound_left + max_right);
}

/// Coin for "the maximum was reached inside [t, t+dt]" given both ends.
bool left_branch_taken(double t, double dt, double x, double x_next, const ConstraintSpec& spec, const Dynamics& dyn,
                       RandomSource& rng) {
    const double t_next = t + dt;
    const double left = dyn.log_density_max(spec.M, t, t_next, x, x_next) +
                        dyn.log_prob_bound(spec.M, t_next, spec.T, x_next, spec.b);
    const double right = dyn.log_prob_bound(spec.M, t, t_next, x, x_next) +
                         dyn.log_density_max(spec.M, t_next, spec.T, x_next, spec.b);
    const double total = log_add_exp(left, right);
    if (total == kNegInf) return false;
    return rng.uniform() < std::exp(left - total);
}

Path run_max(const ConstraintSpec& spec, const Dynamics& base, const NumericsConfig& cfg, RandomSource& rng) {
    const TimeGrid grid(spec.t0, spec.T, cfg.n_timesteps);
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const auto handle = base.prepared(spec, cfg);
    const Dynamics& dyn = *handle;

    const double global_xmin = xmin_for(dyn, spec, cfg.delta);
    const double below_top = std::nextafter(spec.M, kNegInf);

    Path path(grid);
    auto& X = path.values;
    X[0] = spec.a;
    bool attained = cfg.bound_only;
    std::vector<double> logw(cfg.L);

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double x = X[i];
        const double t = grid[i];
        if (!attained && !cfg.sample_branch && std::abs(spec.M - x) < cfg.epsilon) attained = true;

        double floor_level = global_xmin;
        if (cfg.per_step_xmin) {
            ConstraintSpec rest = spec;
            rest.t0 = t;
            rest.a = x;
            floor_level = xmin_for(dyn, rest, cfg.delta);
        }
        const double lo = std::min(floor_level, x) - x;
        const double hi = spec.M - x;
        const double h = (hi - lo) / static_cast<double>(cfg.L - 1);
        for (std::size_t j = 0; j < cfg.L; ++j) {
            const double dX = j + 1 == cfg.L ? hi : lo + static_cast<double>(j) * h;
            logw[j] = log_step_weight(dX, t, dt, x, spec, dyn, attained, cfg.attained_sum);
        }
        try {
            const DensityGrid g = build_density_grid_from_log(logw, lo, hi);
            X[i + 1] = std::min(x + sample_from_grid(g, rng), below_top);
            if (cfg.sample_branch && !attained) attained = left_branch_taken(t, dt, x, X[i + 1], spec, dyn, rng);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "step " << i << " at t=" << t << ", x=" << x << ": " << e.what();
            fail(Errc::infeasible_step, os.str());
        }
    }
    X[n] = spec.b ? *spec.b : X[n - 1];
    return path;
}

}  // namespace

// ---------------------------------------------------------------- spec / config

void ConstraintSpec::validate() const {
    require(std::isfinite(t0) && std::isfinite(T) && T > t0, Errc::invalid_argument, "constraint needs T > t0");
    require(std::isfinite(a) && std::isfinite(M) && (!b || std::isfinite(*b)), Errc::invalid_argument,
            "constraint levels must be finite");
    if (kind == ExtremumKind::max) {
        if (!(M > a) || (b && !(M > *b)))
            fail(Errc::infeasible_constraint, "maximum must exceed the start (and end) value");
    } else {
        if (!(M < a) || (b && !(M < *b)))
            fail(Errc::infeasible_constraint, "minimum must be below the start (and end) value");
    }
}

ConstraintSpec ConstraintSpec::negated() const {
    ConstraintSpec s = *this;
    s.a = -a;
    if (b) s.b = -*b;
    s.M = -M;
    s.kind = kind == ExtremumKind::max ? ExtremumKind::min : ExtremumKind::max;
    return s;
}

void NumericsConfig::validate() const {
    require(n_timesteps >= 4, Errc::invalid_argument, "n_timesteps must be at least 4");
    require(delta > 0.0 && delta < 0.5, Errc::invalid_argument, "delta must lie in (0, 0.5)");
    require(epsilon > 0.0, Errc::invalid_argument, "epsilon must be positive");
    require(L >= 16, Errc::invalid_argument, "L must be at least 16");
}

// ---------------------------------------------------------------- Dynamics

double Dynamics::density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    return std::exp(log_density_max(M, t1, t2, x1, x2));
}

double Dynamics::prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    return std::exp(log_prob_bound(M, t1, t2, x1, x2));
}

double Dynamics::density_increment(double dX, double t, double dt, double x, double T,
                                   std::optional<double> b) const {
    return std::exp(log_density_increment(dX, t, dt, x, T, b));
}

BrownianDynamics::BrownianDynamics(double sigma) : sigma_(sigma) {
    require(sigma > 0.0 && std::isfinite(sigma), Errc::invalid_argument, "sigma must be positive");
}

double BrownianDynamics::log_density_max(double M, double t1, double t2, double x1,
                                         std::optional<double> x2) const {
    if (x2) return log_bb_max_density(M, BridgeEndpoints{t1, t2, x1, *x2, sigma_});
    return log_drift_max_density(M - x1, t2 - t1, DriftParams{0.0, sigma_});
}

double BrownianDynamics::log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    if (x2) return log_bb_max_bound_prob(M, BridgeEndpoints{t1, t2, x1, *x2, sigma_});
    return log_drift_max_bound_prob(M - x1, t2 - t1, DriftParams{0.0, sigma_});
}

double BrownianDynamics::log_density_increment(double dX, double t, double dt, double x, double T,
                                               std::optional<double> b) const {
    const double mean = b ? (*b - x) * dt / (T - t) : 0.0;
    return log_gaussian(dX, mean, sigma_ * sigma_ * dt);
}

std::shared_ptr<const Dynamics> BrownianDynamics::mirrored() const {
    return std::make_shared<BrownianDynamics>(sigma_);
}

std::optional<double> BrownianDynamics::xmin_closed_form(const ConstraintSpec& spec, double delta) const {
    if (spec.b) return xmin_brownian_closed_form(BridgeEndpoints{spec.t0, spec.T, spec.a, *spec.b, sigma_}, delta);
    // Reflection principle: P(min <= a - y) = 2 Phi(-y / (sigma sqrt T)).
    const boost::math::normal_distribution<double> n01;
    return spec.a + sigma_ * std::sqrt(spec.T - spec.t0) * boost::math::quantile(n01, 0.5 * delta);
}

// ---------------------------------------------------------------- conditioned increment

double density_increment_max(double dX, double t, double dt, double x, const ConstraintSpec& spec,
                             const Dynamics& dyn, bool max_attained, bool attained_sum) {
    require(dt > 0.0 && t + dt < spec.T, Errc::invalid_argument, "increment must end before T");
    if (x + dX > spec.M) return 0.0;
    const double den = max_attained ? dyn.log_prob_bound(spec.M, t, spec.T, x, spec.b)
                                    : dyn.log_density_max(spec.M, t, spec.T, x, spec.b);
    if (!(den > std::log(kTiny))) {
        std::ostringstream os;
        os << "normalizer underflows at t=" << t << ", x=" << x << " for M=" << spec.M;
        fail(Errc::zero_denominator, os.str());
    }
    const double num = log_step_weight(dX, t, dt, x, spec, dyn, max_attained, attained_sum);
    return std::exp(num - den);
}

// ---------------------------------------------------------------- lower cutoff

double xmin_brownian_closed_form(const BridgeEndpoints& ep, double delta) {
    ep.validate();
    require(delta > 0.0 && delta < 1.0, Errc::invalid_argument, "delta must lie in (0, 1)");
    const double d = ep.x1 - ep.x2;
    const double s2t = ep.sigma * ep.sigma * ep.span();
    return 0.5 * (ep.x1 + ep.x2) - 0.5 * std::sqrt(d * d - 2.0 * s2t * std::log(delta));
}

double xmin_numeric(const Dynamics& dyn, const ConstraintSpec& spec, double delta) {
    require(delta > 0.0 && delta < 1.0, Errc::invalid_argument, "delta must lie in (0, 1)");
    const auto mirror = dyn.mirrored();
    const std::optional<double> nb = spec.b ? std::optional<double>(-*spec.b) : std::nullopt;
    // P(min <= level) - delta, increasing in level.
    auto excess = [&](double level) {
        return -std::expm1(mirror->log_prob_bound(-level, spec.t0, spec.T, -spec.a, nb)) - delta;
    };
    const double hi = spec.b ? std::min(spec.a, *spec.b) : spec.a;
    const double step = dyn.scale() * std::sqrt(spec.T - spec.t0);
    double lo = hi - step;
    double f_lo = excess(lo);
    for (int i = 0; f_lo > 0.0; ++i) {
        if (i == 40) fail(Errc::no_bracket, "no lower cutoff found for the requested delta");
        lo -= step * static_cast<double>(1 << std::min(i, 10));
        f_lo = excess(lo);
    }
    // Start a hair below the level: at zero distance the passage is instant and
    // tabulated families cannot resolve it.
    const double top = hi - 1e-7 * step;
    const double f_hi = excess(top);
    if (f_hi <= 0.0) return top;
    boost::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(excess, lo, top, f_lo, f_hi,
                                                     boost::math::tools::eps_tolerance<double>(40), iters);
    return 0.5 * (r.first + r.second);
}

double xmin_for(const Dynamics& dyn, const ConstraintSpec& spec, double delta) {
    if (auto v = dyn.xmin_closed_form(spec, delta)) return *v;
    return xmin_numeric(dyn, spec, delta);
}

// ---------------------------------------------------------------- generators

Path gen_constrained_bayesian(const ConstraintSpec& spec, const Dynamics& dyn, const NumericsConfig& cfg,
                              RandomSource& rng) {
    spec.validate();
    cfg.validate();
    if (spec.kind == ExtremumKind::max) return run_max(spec, dyn, cfg, rng);
    Path p = run_max(spec.negated(), *dyn.mirrored(), cfg, rng);
    for (auto& v : p.values) v = -v;
    return p;
}

Path gen_open_constrained(const ConstraintSpec& spec, const Dynamics& dyn, const NumericsConfig& cfg,
                          RandomSource& rng) {
    require(!spec.b, Errc::invalid_argument, "open-ended generation takes no end value");
    return gen_constrained_bayesian(spec, dyn, cfg, rng);
}

// ---------------------------------------------------------------- rectification

Path rectify(const Path& path, double a, std::optional<double> b, double M, ExtremumKind kind) {
    if (kind == ExtremumKind::min) {
        Path neg = path;
        for (auto& v : neg.values) v = -v;
        Path r = rectify(neg, -a, b ? std::optional<double>(-*b) : std::nullopt, -M, ExtremumKind::max);
        for (auto& v : r.values) v = -v;
        return r;
    }
    Path out = path;
    auto& X = out.values;
    const std::size_t k = out.argmax();
    const double m_tilde = X[k];
    if (m_tilde == a) fail(Errc::degenerate_scale, "path maximum equals the start value");
    const double s1 = (M - a) / (m_tilde - a);
    for (auto& v : X) v = a + s1 * (v - a);
    X.front() = a;
    X[k] = M;
    if (b) {
        const double b_tilde = X.back();
        if (b_tilde == M || k + 1 == X.size()) fail(Errc::degenerate_scale, "path ends at its maximum");
        const double s2 = (M - *b) / (M - b_tilde);
        for (std::size_t j = k + 1; j < X.size(); ++j) X[j] = M + s2 * (X[j] - M);
        X.back() = *b;
    }
    return out;
}

}  // namespace bridgex
