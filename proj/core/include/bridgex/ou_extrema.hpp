#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "bridgex/bayesian.hpp"
#include "bridgex/densities.hpp"
#include "bridgex/processes.hpp"

namespace bridgex {

// Everything below the OUDynamics class works in the normalized process
// dZ = -Z ds + dW, reached from dX = kappa (mu - X) dt + sigma dW by
// Z = sqrt(kappa)/sigma (X - mu), s = kappa t.

struct NormalizedOUCoords {
    OUParams p;

    explicit NormalizedOUCoords(const OUParams& params);

    double level(double x) const noexcept { return root_k_over_s_ * (x - p.mu); }
    double unlevel(double z) const noexcept { return p.mu + z / root_k_over_s_; }
    double time(double t) const noexcept { return p.kappa * t; }
    double untime(double s) const noexcept { return s / p.kappa; }
    /// d(level)/dx, the Jacobian for densities in a level variable.
    double jacobian() const noexcept { return root_k_over_s_; }

private:
    double root_k_over_s_;
};

/// Scale function and speed density of the OU process in original units,
/// with base point 0.
struct LinearDiffusionSpec {
    OUParams p;

    double S(double x) const;
    double S_prime(double x) const noexcept;
    double m(double x) const noexcept;
};

LinearDiffusionSpec scale_and_speed(const OUParams& p);

struct AbcWeights {
    double alpha;
    double beta;
    double gamma;
};

/// Product-integration weights of the 1/sqrt(x - s) kernel against the
/// quadratic interpolant on the nodes y, y + z, y + 2z.
AbcWeights volterra_abc(double x, double y, double z);

/// Weight of node i in the composite rule over [0, t_upper] used for node n,
/// where the full blocks end at t_{2 floor((n - 1) / 2)}.
double volterra_weights(std::size_t n, std::size_t i, double h, std::span<const double> nodes);

/// Solution of nu(th) = 1 + (2b/sqrt(pi)) int_0^th K(th, th') nu(th') / sqrt(th - th') dth'
/// with K(th, th') = exp(-b^2 (th - th') / (2 - th - th')) (1 - th') / (2 - th - th')^{3/2}.
struct VolterraSolution {
    double b = 0.0;
    double h = 0.0;
    std::vector<double> nodes;
    std::vector<double> F;

    /// Piecewise quadratic interpolation on the blocks; constant beyond the end.
    double operator()(double theta) const noexcept;
    void write_csv(std::ostream& os) const;
};

/// The smooth part of the kernel above (everything except 1/sqrt(th - th')).
double volterra_kernel(double b, double theta, double theta_prime) noexcept;

VolterraSolution solve_volterra_nu(double b_level, double theta_max, std::size_t n_blocks);

/// Small-time closed form 2 e^{b^2 th / 2} Phi(b sqrt th) of the same equation.
double nu_abel_approx(double vartheta, double b_level) noexcept;

using NuFunction = std::function<double(double)>;

enum class NuMethod { volterra, abel };

/// nu for first passage upward to `level` (the equation is solved with b = -level),
/// valid on [0, theta_max].
NuFunction nu_for_level(double level, double theta_max, NuMethod method, std::size_t n_blocks = 1000);

/// P(no passage to level by time s | Z_0 = x), for x below the level.
double ou_survival(double s, double x, double level, const NuFunction& nu);

/// Density of the first passage time of Z from a_level up to b_level.
double hitting_time_density(double t, double a_level, double b_level, const NuFunction& nu);

/// Transition density of Z over time s.
double ou_transition_density(double s, double x, double y) noexcept;

/// Survival probabilities u(j ds, x_k), j = 0..n_cells, one row per x.
std::vector<std::vector<double>> survival_rows(double level, std::span<const double> xs, double ds,
                                               std::size_t n_cells, const NuFunction& nu);

enum class OUMode { bridge, open };

/// Density of the maximum over [t1, t2] (in original units) for the OU
/// process from x1, conditioned on ending at x2 in bridge mode.
double ou_max_density(double M, const BridgeEndpoints& ep, const OUParams& p, OUMode mode,
                      NuMethod method = NuMethod::volterra);

/// P(max over [t1, t2] <= M) in the same setting.
double ou_max_bound_prob(double M, const BridgeEndpoints& ep, const OUParams& p, OUMode mode,
                         NuMethod method = NuMethod::volterra);

struct OUOptions {
    NuMethod nu = NuMethod::volterra;
    std::size_t x_nodes = 128;
    /// Sub-steps of the survival table per generator step.
    std::size_t refine = 8;
    std::size_t nu_blocks = 1000;
};

/// OU family for the incremental generator. Factors over one generator step
/// use the Brownian-bridge short-interval limit; factors over the rest of the
/// horizon come from first-passage tables built by prepared().
class OUDynamics final : public Dynamics {
public:
    explicit OUDynamics(const OUParams& p, OUOptions opt = {});

    double log_density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const override;
    double log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const override;
    double log_density_increment(double dX, double t, double dt, double x, double T,
                                 std::optional<double> b) const override;
    std::shared_ptr<const Dynamics> mirrored() const override;
    double scale() const noexcept override { return p_.sigma; }
    std::shared_ptr<const Dynamics> prepared(const ConstraintSpec& spec, const NumericsConfig& cfg) const override;
    std::optional<double> xmin_closed_form(const ConstraintSpec& spec, double delta) const override;

    const OUParams& params() const noexcept { return p_; }
    const OUOptions& options() const noexcept { return opt_; }

    struct Tables;

private:
    struct Factors {
        double log_bound;
        double log_max;
    };
    Factors right_factors(double M, double t1, double t2, double x1, std::optional<double> x2) const;

    OUParams p_;
    OUOptions opt_;
    NormalizedOUCoords nc_;
    std::shared_ptr<const Tables> tables_;

    using Key = std::tuple<double, double, double, double, bool, double, std::size_t, double>;
    mutable std::mutex mu_;
    mutable std::map<Key, std::shared_ptr<const Dynamics>> cache_;
};

std::shared_ptr<const OUDynamics> ou_dynamics(const OUParams& p, OUOptions opt = {});

}  // namespace bridgex
