#include "bridgex/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bridgex/numerics.hpp"

namespace bridgex {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double gaussian(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

void BridgeEndpoints::validate() const {
    require(std::isfinite(t1) && std::isfinite(t2) && t2 > t1, Errc::invalid_argument,
            "bridge endpoints need t2 > t1");
    require(std::isfinite(x1) && std::isfinite(x2), Errc::invalid_argument, "bridge endpoint values must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), Errc::invalid_argument, "sigma must be positive");
}

void DriftParams::validate() const {
    require(std::isfinite(c), Errc::invalid_argument, "drift must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), Errc::invalid_argument, "sigma must be positive");
}

double bb_increment_density(double dX, double t, double dt, double x, const BridgeEndpoints& ep) {
    require(dt > 0.0, Errc::invalid_argument, "dt must be positive");
    const double rem = ep.t2 - t;
    if (!(rem > dt)) fail(Errc::degenerate_interval, "no room between t + dt and the bridge end");
    return gaussian(dX, (ep.x2 - x) * dt / rem, ep.sigma * ep.sigma * dt);
}

double log_bb_max_density(double M, const BridgeEndpoints& ep) {
    if (M < ep.x1 || M < ep.x2) return kNegInf;
    const double s2t = ep.sigma * ep.sigma * ep.span();
    const double lin = 2.0 * M - ep.x1 - ep.x2;
    if (lin <= 0.0) return kNegInf;
    return std::log(2.0 * lin / s2t) - 2.0 * (M - ep.x1) * (M - ep.x2) / s2t;
}

double bb_max_density(double M, const BridgeEndpoints& ep) { return std::exp(log_bb_max_density(M, ep)); }

double log_bb_max_bound_prob(double M, const BridgeEndpoints& ep) {
    if (M < ep.x1 || M < ep.x2) return kNegInf;
    const double k = 2.0 * (M - ep.x1) * (M - ep.x2) / (ep.sigma * ep.sigma * ep.span());
    return log1mexp(k);
}

double bb_max_bound_prob(double M, const BridgeEndpoints& ep) {
    if (M < ep.x1 || M < ep.x2) return 0.0;
    const double k = 2.0 * (M - ep.x1) * (M - ep.x2) / (ep.sigma * ep.sigma * ep.span());
    return -std::expm1(-k);
}

double bb_min_density(double m, const BridgeEndpoints& ep) {
    BridgeEndpoints neg = ep;
    neg.x1 = -ep.x1;
    neg.x2 = -ep.x2;
    return bb_max_density(-m, neg);
}

double bb_argmax_density_given_max(double theta, double M, const BridgeEndpoints& ep) {
    if (!(M > ep.x1 && M > ep.x2)) fail(Errc::invalid_extremum, "argmax density needs M > max(x1, x2)");
    const double T = ep.span();
    const double s = theta - ep.t1;
    if (!(s > 0.0 && s < T)) return 0.0;
    const double A = (M - ep.x1) / ep.sigma;
    const double B = (M - ep.x2) / ep.sigma;
    const double expo = (A - B) * (A - B) / (2.0 * T) + 2.0 * A * B / T - A * A / (2.0 * s) - B * B / (2.0 * (T - s));
    const double log_pre = std::log(A * B / (A + B)) - kLogSqrt2Pi + 1.5 * std::log(T / (s * (T - s)));
    return std::exp(log_pre + expo);
}

double bb_joint_min_argmin_density(double m, double theta, const BridgeEndpoints& ep) {
    if (!(m < ep.x1 && m < ep.x2)) return 0.0;
    const double T = ep.span();
    const double s = theta - ep.t1;
    if (!(s > 0.0 && s < T)) return 0.0;
    const double A = (ep.x1 - m) / ep.sigma;
    const double B = (ep.x2 - m) / ep.sigma;
    const double expo = (A - B) * (A - B) / (2.0 * T) - A * A / (2.0 * s) - B * B / (2.0 * (T - s));
    const double log_pre = std::log(A * B * std::sqrt(2.0 * T / std::numbers::pi)) -
                           1.5 * (std::log(s) + std::log(T - s));
    return std::exp(log_pre + expo) / ep.sigma;
}

// ---------------------------------------------------------------- drift family

double mills_ratio(double x) noexcept {
    if (x < 25.0) return normal_cdf(-x) / normal_pdf(x);
    // Continued fraction, converges quickly for large x.
    double f = x;
    for (int k = 40; k >= 1; --k) f = x + k / f;
    return 1.0 / f;
}

// With y = (M - cT)/sqrt(T) and x = (M + cT)/sqrt(T), exp(2cM) phi(x) = phi(y),
// which keeps both the density and the bound probability free of overflow.

double log_drift_max_density(double M, double T, const DriftParams& p) {
    if (M < 0.0) return kNegInf;
    const double c = p.c / p.sigma;
    const double m = M / p.sigma;
    const double rt = std::sqrt(T);
    const double y = (m - c * T) / rt;
    const double x = (m + c * T) / rt;
    const double bracket = 1.0 / rt - c * mills_ratio(x);
    if (!(bracket > 0.0)) return kNegInf;
    return std::log(2.0) - 0.5 * y * y - kLogSqrt2Pi + std::log(bracket) - std::log(p.sigma);
}

double drift_max_density(double M, double T, const DriftParams& p) {
    return std::exp(log_drift_max_density(M, T, p));
}

double drift_max_bound_prob(double M, double T, const DriftParams& p) {
    if (M < 0.0) return 0.0;
    const double c = p.c / p.sigma;
    const double m = M / p.sigma;
    const double rt = std::sqrt(T);
    const double y = (m - c * T) / rt;
    const double x = (m + c * T) / rt;
    // 1 - P = Phi(-y) + phi(y) R(x); evaluate whichever side is small.
    const double upper = normal_cdf(-y) + normal_pdf(y) * mills_ratio(x);
    if (upper < 0.5) return std::clamp(1.0 - upper, 0.0, 1.0);
    return std::clamp(normal_cdf(y) - normal_pdf(y) * mills_ratio(x), 0.0, 1.0);
}

double log_drift_max_bound_prob(double M, double T, const DriftParams& p) {
    if (M < 0.0) return kNegInf;
    const double c = p.c / p.sigma;
    const double m = M / p.sigma;
    const double rt = std::sqrt(T);
    const double y = (m - c * T) / rt;
    const double x = (m + c * T) / rt;
    const double upper = normal_cdf(-y) + normal_pdf(y) * mills_ratio(x);
    if (upper < 0.5) return std::log1p(-upper);
    const double v = normal_cdf(y) - normal_pdf(y) * mills_ratio(x);
    return v > 0.0 ? std::log(v) : kNegInf;
}

double drift_increment_density(double dX, double dt, const DriftParams& p) {
    require(dt > 0.0, Errc::invalid_argument, "dt must be positive");
    return gaussian(dX, p.c * dt, p.sigma * p.sigma * dt);
}

double drift_argmax_density(double theta, double T, const DriftParams& p) {
    if (!(theta > 0.0 && theta < T)) return 0.0;
    const double c = p.c / p.sigma;
    const double u = T - theta;
    const double left = std::exp(-0.5 * c * c * theta) / std::sqrt(2.0 * std::numbers::pi * theta) +
                        c * normal_cdf(c * std::sqrt(theta));
    const double right = std::exp(-0.5 * c * c * u) / std::sqrt(2.0 * std::numbers::pi * u) -
                         c * normal_cdf(-c * std::sqrt(u));
    return 2.0 * left * right;
}

}  // namespace bridgex
