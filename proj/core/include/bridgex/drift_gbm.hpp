#pragma once

#include <memory>
#include <optional>

#include "bridgex/bayesian.hpp"
#include "bridgex/densities.hpp"
#include "bridgex/meander.hpp"

namespace bridgex {

/// Brownian motion with drift c and volatility sigma. Over a bridge segment the
/// drift drops out, so bridge queries use the Brownian-bridge laws; open
/// queries use the drifted laws measured from the current value.
class DriftDynamics final : public Dynamics {
public:
    explicit DriftDynamics(const DriftParams& p);

    double log_density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const override;
    double log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const override;
    double log_density_increment(double dX, double t, double dt, double x, double T,
                                 std::optional<double> b) const override;
    std::shared_ptr<const Dynamics> mirrored() const override;
    double scale() const noexcept override { return p_.sigma; }
    std::optional<double> xmin_closed_form(const ConstraintSpec& spec, double delta) const override;

    const DriftParams& params() const noexcept { return p_; }

private:
    DriftParams p_;
};

std::shared_ptr<const DriftDynamics> drift_dynamics(const DriftParams& p);

/// Density of the argmax time on [0, T] of a drifted path from 0 whose
/// maximum is M (above the start): first passage to M at theta, then a
/// remainder whose own maximum is its start value.
double drift_argmax_density_given_max(double theta, double M, double T, const DriftParams& p);

/// Drifted path on [0, T] from a conditioned on max = M. Runs in the
/// coordinates (X - a) / sigma, where the drift becomes c / sigma and the
/// attainment band epsilon / sigma.
Path gen_drift_open_with_max(double a, double M, const DriftParams& p, double T, const NumericsConfig& cfg,
                             RandomSource& rng);

/// A drifted bridge has the law of the driftless one, so c is not used.
Path gen_bridge_with_max_drift(const BridgeEndpoints& ep, double M, double c, const TimeGrid& grid,
                               RandomSource& rng);

/// exp(Y) where Y has drift c and volatility sigma. All levels are positive.
struct GBMParams {
    double c = 0.0;
    double sigma = 1.0;
    double a = 1.0;
    std::optional<double> b;
    double M = 2.0;
    /// Use c - sigma^2 / 2 as the drift of Y.
    bool ito_correction = false;
    /// Open mode: rectify the log path so the maximum is met exactly.
    bool rectify = false;

    void validate() const;
};

/// Bridge mode when b is set (Method 1 on the logs), open mode otherwise
/// (drifted incremental generator on the logs). Grid [0, T] with
/// cfg.n_timesteps steps.
Path gen_gbm_with_max(const GBMParams& p, double T, const NumericsConfig& cfg, RandomSource& rng);

}  // namespace bridgex
