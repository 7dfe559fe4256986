#include "bridgex/drift_gbm.hpp"

#include <cmath>
#include <numbers>

namespace bridgex {

DriftDynamics::DriftDynamics(const DriftParams& p) : p_(p) { p_.validate(); }

std::shared_ptr<const DriftDynamics> drift_dynamics(const DriftParams& p) {
    return std::make_shared<DriftDynamics>(p);
}

double DriftDynamics::log_density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    if (x2) return log_bb_max_density(M, BridgeEndpoints{t1, t2, x1, *x2, p_.sigma});
    return log_drift_max_density(M - x1, t2 - t1, p_);
}

double DriftDynamics::log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    if (x2) return log_bb_max_bound_prob(M, BridgeEndpoints{t1, t2, x1, *x2, p_.sigma});
    return log_drift_max_bound_prob(M - x1, t2 - t1, p_);
}

double DriftDynamics::log_density_increment(double dX, double t, double dt, double x, double T,
                                            std::optional<double> b) const {
    const double mean = b ? (*b - x) * dt / (T - t) : p_.c * dt;
    const double var = p_.sigma * p_.sigma * dt;
    const double d = dX - mean;
    return -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
}

std::shared_ptr<const Dynamics> DriftDynamics::mirrored() const {
    return std::make_shared<DriftDynamics>(DriftParams{-p_.c, p_.sigma});
}

std::optional<double> DriftDynamics::xmin_closed_form(const ConstraintSpec& spec, double delta) const {
    if (spec.b) return xmin_brownian_closed_form(BridgeEndpoints{spec.t0, spec.T, spec.a, *spec.b, p_.sigma}, delta);
    return std::nullopt;
}

double drift_argmax_density_given_max(double theta, double M, double T, const DriftParams& p) {
    p.validate();
    require(M > 0.0, Errc::invalid_extremum, "maximum must exceed the start value");
    require(T > 0.0, Errc::invalid_argument, "horizon must be positive");
    if (!(theta > 0.0 && theta < T)) return 0.0;
    const double c = p.c / p.sigma;
    const double m = M / p.sigma;
    const double z = (m - c * theta) / std::sqrt(theta);
    const double passage = m / theta * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * theta);
    const double r = T - theta;
    const double x = c * std::sqrt(r);
    const double at_start = 2.0 * normal_pdf(x) * (1.0 / std::sqrt(r) - c * mills_ratio(x)) / p.sigma;
    return passage * at_start / drift_max_density(M, T, p);
}

Path gen_drift_open_with_max(double a, double M, const DriftParams& p, double T, const NumericsConfig& cfg,
                             RandomSource& rng) {
    p.validate();
    require(M > a, Errc::infeasible_constraint, "maximum must exceed the start value");
    ConstraintSpec spec;
    spec.t0 = 0.0;
    spec.T = T;
    spec.a = 0.0;
    spec.M = (M - a) / p.sigma;
    NumericsConfig unit = cfg;
    unit.epsilon = cfg.epsilon / p.sigma;
    const DriftDynamics dyn(DriftParams{p.c / p.sigma, 1.0});
    Path path = gen_open_constrained(spec, dyn, unit, rng);
    for (auto& v : path.values) v = a + p.sigma * v;
    path.values.front() = a;
    return path;
}

Path gen_bridge_with_max_drift(const BridgeEndpoints& ep, double M, double /*c*/, const TimeGrid& grid,
                               RandomSource& rng) {
    return gen_bridge_with_max_meander(ep, M, grid, rng);
}

void GBMParams::validate() const {
    require(sigma > 0.0 && std::isfinite(sigma) && std::isfinite(c), Errc::invalid_argument,
            "GBM needs finite c and positive sigma");
    if (!(a > 0.0) || (b && !(*b > 0.0)) || !(M > 0.0))
        fail(Errc::infeasible_constraint, "GBM levels a, b, M must be positive");
    if (!(M > a) || (b && !(M > *b))) fail(Errc::infeasible_constraint, "maximum must exceed the end values");
}

Path gen_gbm_with_max(const GBMParams& p, double T, const NumericsConfig& cfg, RandomSource& rng) {
    p.validate();
    const double la = std::log(p.a), lm = std::log(p.M);
    Path path = [&] {
        if (p.b) {
            const TimeGrid grid(0.0, T, cfg.n_timesteps);
            return gen_bridge_with_max_drift(BridgeEndpoints{0.0, T, la, std::log(*p.b), p.sigma}, lm, p.c, grid,
                                             rng);
        }
        const double drift = p.ito_correction ? p.c - 0.5 * p.sigma * p.sigma : p.c;
        Path y = gen_drift_open_with_max(la, lm, DriftParams{drift, p.sigma}, T, cfg, rng);
        return p.rectify ? rectify(y, la, std::nullopt, lm) : y;
    }();
    const std::size_t k = path.argmax();
    const bool hit = path.values[k] == lm;
    for (auto& v : path.values) v = std::exp(v);
    path.values.front() = p.a;
    if (p.b) path.values.back() = *p.b;
    if (hit) path.values[k] = p.M;
    return path;
}

}  // namespace bridgex
