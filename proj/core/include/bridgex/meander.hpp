#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bridgex/densities.hpp"
#include "bridgex/numerics.hpp"
#include "bridgex/random.hpp"

namespace bridgex {

/// Meander from a to a + r over [0, T] with volatility sigma.
struct MeanderSpec {
    double r = 0.0;
    double T = 1.0;
    double sigma = 1.0;
    double a = 0.0;

    void validate() const;
};

inline constexpr std::size_t kArgmaxGridPoints = 4096;

/// Standard meander on the uniform fractions i/n_steps of [0, 1], ending at r:
/// sqrt((r s + W1)^2 + W2^2 + W3^2) for three independent unit bridges.
template <NormalSource G>
std::vector<double> standard_meander_values(double r, std::size_t n_steps, G& rng) {
    const double sd = std::sqrt(1.0 / static_cast<double>(n_steps));
    std::vector<double> out(n_steps + 1, 0.0);
    std::vector<double> sq(n_steps + 1, 0.0);
    std::vector<double> w(n_steps + 1, 0.0);
    for (int d = 0; d < 3; ++d) {
        for (std::size_t i = 1; i <= n_steps; ++i) w[i] = w[i - 1] + sd * rng.normal();
        const double wn = w[n_steps];
        for (std::size_t i = 0; i <= n_steps; ++i) {
            const double s = static_cast<double>(i) / static_cast<double>(n_steps);
            double b = w[i] - wn * s;
            if (d == 0) b += r * s;
            sq[i] += b * b;
        }
    }
    for (std::size_t i = 0; i <= n_steps; ++i) out[i] = std::sqrt(sq[i]);
    out.front() = 0.0;
    out.back() = r;
    return out;
}

/// Meander on an arbitrary grid: a + sigma sqrt(T) W^{me, r/(sigma sqrt T)}_{t/T}.
template <NormalSource G>
std::vector<double> scaled_meander_values(const MeanderSpec& spec, std::size_t n_steps, G& rng) {
    const double scale = spec.sigma * std::sqrt(spec.T);
    auto v = standard_meander_values(spec.r / scale, n_steps, rng);
    for (auto& x : v) x = spec.a + scale * x;
    v.front() = spec.a;
    v.back() = spec.a + spec.r;
    return v;
}

template <NormalSource G>
Path gen_standard_meander(double r, const TimeGrid& grid, G& rng) {
    require(r >= 0.0, Errc::invalid_argument, "meander terminal value must be nonnegative");
    return Path(grid, standard_meander_values(r, grid.n_steps(), rng));
}

template <NormalSource G>
Path gen_scaled_meander(const MeanderSpec& spec, const TimeGrid& grid, G& rng) {
    spec.validate();
    return Path(grid, scaled_meander_values(spec, grid.n_steps(), rng));
}

/// Tabulated argmax law of a Brownian bridge from x1 to x2 given maximum M.
DensityGrid argmax_density_grid(double M, const BridgeEndpoints& ep, std::size_t n_points = kArgmaxGridPoints);

/// One draw from the argmax law. Rebuilds the table on every call; batch
/// callers should hold a MeanderBridgeSampler instead.
double sample_argmax(double M, const BridgeEndpoints& ep, RandomSource& rng);

/// Brownian bridge conditioned on its maximum, built from two meanders that
/// meet at the sampled argmax. The argmax table is built once here.
class MeanderBridgeSampler {
public:
    MeanderBridgeSampler(const BridgeEndpoints& ep, double M, std::size_t n_theta = kArgmaxGridPoints);

    const BridgeEndpoints& endpoints() const noexcept { return ep_; }
    double M() const noexcept { return M_; }
    const DensityGrid& argmax_grid() const noexcept { return theta_; }

    double sample_argmax(RandomSource& rng) const { return sample_from_grid(theta_, rng); }

    /// The grid must span [t1, t2]. The argmax is snapped to the nearest
    /// interior node.
    Path generate(const TimeGrid& grid, RandomSource& rng) const;

    /// Same construction with the argmax node given.
    template <NormalSource G>
    Path generate_at(const TimeGrid& grid, std::size_t k, G& rng) const {
        const std::size_t n = grid.n_steps();
        require(n >= 3, Errc::invalid_argument, "conditioned bridge needs at least 4 grid nodes");
        require(k >= 1 && k + 1 <= n, Errc::invalid_argument, "argmax node must be interior");
        const double dt = grid.dt();
        const auto left =
            scaled_meander_values(MeanderSpec{M_ - ep_.x1, dt * static_cast<double>(k), ep_.sigma, 0.0}, k, rng);
        const auto right = scaled_meander_values(
            MeanderSpec{M_ - ep_.x2, dt * static_cast<double>(n - k), ep_.sigma, 0.0}, n - k, rng);
        Path p(grid);
        for (std::size_t j = 0; j <= k; ++j) p.values[j] = M_ - left[k - j];
        for (std::size_t j = 0; j <= n - k; ++j) p.values[k + j] = M_ - right[j];
        p.values.front() = ep_.x1;
        p.values[k] = M_;
        p.values.back() = ep_.x2;
        return p;
    }

private:
    BridgeEndpoints ep_;
    double M_;
    DensityGrid theta_;
};

Path gen_bridge_with_max_meander(const BridgeEndpoints& ep, double M, const TimeGrid& grid, RandomSource& rng);

}  // namespace bridgex
