#pragma once

#include "bridgex/error.hpp"

namespace bridgex {

/// A Brownian bridge segment: value x1 at t1, x2 at t2, volatility sigma.
struct BridgeEndpoints {
    double t1 = 0.0;
    double t2 = 1.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double sigma = 1.0;

    double span() const noexcept { return t2 - t1; }
    void validate() const;
};

/// Drift c per unit time and volatility sigma.
struct DriftParams {
    double c = 0.0;
    double sigma = 1.0;

    void validate() const;
};

// Brownian bridge family. Level arguments are in original units; densities
// in a level variable carry the 1/sigma Jacobian.

/// Gaussian with mean (x2 - x) dt / (t2 - t) and variance sigma^2 dt.
double bb_increment_density(double dX, double t, double dt, double x, const BridgeEndpoints& ep);

double bb_max_density(double M, const BridgeEndpoints& ep);
double log_bb_max_density(double M, const BridgeEndpoints& ep);

/// P(max over [t1, t2] <= M).
double bb_max_bound_prob(double M, const BridgeEndpoints& ep);
double log_bb_max_bound_prob(double M, const BridgeEndpoints& ep);

/// Density of the minimum alone.
double bb_min_density(double m, const BridgeEndpoints& ep);

/// Density of the location of the maximum given that the maximum is M.
/// Throws InvalidExtremum unless M > max(x1, x2).
double bb_argmax_density_given_max(double theta, double M, const BridgeEndpoints& ep);

/// Joint density of (min, argmin).
double bb_joint_min_argmin_density(double m, double theta, const BridgeEndpoints& ep);

// Drifted Brownian motion started at 0 and run for time T. M is measured from
// the start value.

double drift_max_density(double M, double T, const DriftParams& p);
double log_drift_max_density(double M, double T, const DriftParams& p);

double drift_max_bound_prob(double M, double T, const DriftParams& p);
double log_drift_max_bound_prob(double M, double T, const DriftParams& p);

/// Normal with mean c dt and variance sigma^2 dt.
double drift_increment_density(double dX, double dt, const DriftParams& p);

/// Density of the location of the maximum, not conditioned on its value.
/// Depends on the parameters only through c / sigma.
double drift_argmax_density(double theta, double T, const DriftParams& p);

/// Phi(-x) / phi(x), stable for large positive x.
double mills_ratio(double x) noexcept;

}  // namespace bridgex
