#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "bridgex/densities.hpp"
#include "bridgex/numerics.hpp"
#include "bridgex/random.hpp"

namespace bridgex {

enum class ExtremumKind { max, min };

/// What is being conditioned on. b absent means an open-ended path.
struct ConstraintSpec {
    double t0 = 0.0;
    double T = 1.0;
    double a = 0.0;
    std::optional<double> b;
    double M = 1.0;
    ExtremumKind kind = ExtremumKind::max;

    bool is_bridge() const noexcept { return b.has_value(); }
    void validate() const;
    /// The same constraint for -X.
    ConstraintSpec negated() const;
};

struct NumericsConfig {
    std::size_t n_timesteps = 100;
    double delta = 1e-3;
    double epsilon = 0.2;
    std::size_t L = 1000;
    std::uint64_t seed = 0;
    /// Recompute the lower cutoff from the current value at every step.
    bool per_step_xmin = false;
    /// Condition only on max <= M (the attained branch from the first step).
    /// Used to check that a vacuous bound leaves the dynamics untouched.
    bool bound_only = false;
    /// Combine the two bound probabilities by summing instead of multiplying
    /// once the maximum is attained. Kept for comparison only.
    bool attained_sum = false;
    /// After each increment, decide by a coin with the exact Bayes odds
    /// whether the maximum fell in the step just taken, instead of waiting for
    /// a node to come within epsilon of M (epsilon is then unused). Off by
    /// default.
    bool sample_branch = false;

    void validate() const;
};

/// Transition and extremum laws of one process family, always for the
/// maximum. A query with x2 present is about the bridge from x1 at t1 to x2 at
/// t2; without x2 it is about the open path started at x1.
class Dynamics {
public:
    virtual ~Dynamics() = default;

    virtual double log_density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const = 0;
    virtual double log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const = 0;
    /// Unconstrained increment over [t, t + dt] from x; b is the bridge end at T.
    virtual double log_density_increment(double dX, double t, double dt, double x, double T,
                                         std::optional<double> b) const = 0;

    /// Law of -X.
    virtual std::shared_ptr<const Dynamics> mirrored() const = 0;
    /// Volatility, used to size search brackets.
    virtual double scale() const noexcept = 0;

    /// The dynamics to use for one run with this constraint and step size.
    /// Families with tabulated factors return an immutable copy holding the
    /// tables (built once per configuration, safe to call concurrently). The
    /// default is a non-owning handle to this object.
    virtual std::shared_ptr<const Dynamics> prepared(const ConstraintSpec&, const NumericsConfig&) const {
        return std::shared_ptr<const Dynamics>(std::shared_ptr<const Dynamics>(), this);
    }

    /// Lower cutoff in closed form, if the family has one.
    virtual std::optional<double> xmin_closed_form(const ConstraintSpec&, double /*delta*/) const {
        return std::nullopt;
    }

    double density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const;
    double prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const;
    double density_increment(double dX, double t, double dt, double x, double T, std::optional<double> b) const;
};

/// Brownian motion with volatility sigma.
class BrownianDynamics final : public Dynamics {
public:
    explicit BrownianDynamics(double sigma);

    double log_density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const override;
    double log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const override;
    double log_density_increment(double dX, double t, double dt, double x, double T,
                                 std::optional<double> b) const override;
    std::shared_ptr<const Dynamics> mirrored() const override;
    double scale() const noexcept override { return sigma_; }
    std::optional<double> xmin_closed_form(const ConstraintSpec& spec, double delta) const override;

private:
    double sigma_;
};

/// Conditioned increment density at one step. Throws ZeroDenominator if the
/// normalizing probability underflows.
double density_increment_max(double dX, double t, double dt, double x, const ConstraintSpec& spec,
                             const Dynamics& dyn, bool max_attained, bool attained_sum = false);

/// Lower cutoff with P(min <= X_min) = delta under the bridge law.
double xmin_brownian_closed_form(const BridgeEndpoints& ep, double delta);

/// Lower cutoff from the family's bound probability for -X, by bracketed root search.
double xmin_numeric(const Dynamics& dyn, const ConstraintSpec& spec, double delta);

/// Closed form when the family has one, otherwise the numeric search.
double xmin_for(const Dynamics& dyn, const ConstraintSpec& spec, double delta);

/// Incremental generator conditioned on the extremum (and the end value when
/// spec.b is set). Step failures are reported as InfeasibleStep.
Path gen_constrained_bayesian(const ConstraintSpec& spec, const Dynamics& dyn, const NumericsConfig& cfg,
                              RandomSource& rng);

/// Open-ended variant; spec.b must be absent.
Path gen_open_constrained(const ConstraintSpec& spec, const Dynamics& dyn, const NumericsConfig& cfg,
                          RandomSource& rng);

/// Affine correction so the path attains M exactly (and ends at b exactly).
Path rectify(const Path& path, double a, std::optional<double> b, double M,
             ExtremumKind kind = ExtremumKind::max);

}  // namespace bridgex
