#include "bridgex/meander.hpp"

#include <algorithm>

namespace bridgex {

void MeanderSpec::validate() const {
    require(r >= 0.0 && std::isfinite(r), Errc::invalid_argument, "meander terminal value must be nonnegative");
    require(T > 0.0 && std::isfinite(T), Errc::invalid_argument, "meander horizon must be positive");
    require(sigma > 0.0 && std::isfinite(sigma), Errc::invalid_argument, "sigma must be positive");
}

DensityGrid argmax_density_grid(double M, const BridgeEndpoints& ep, std::size_t n_points) {
    ep.validate();
    if (!(M > ep.x1 && M > ep.x2)) fail(Errc::invalid_extremum, "argmax law needs M > max(x1, x2)");
    return build_density_grid([&](double t) { return bb_argmax_density_given_max(t, M, ep); }, ep.t1, ep.t2,
                              n_points);
}

double sample_argmax(double M, const BridgeEndpoints& ep, RandomSource& rng) {
    return sample_from_grid(argmax_density_grid(M, ep), rng);
}

MeanderBridgeSampler::MeanderBridgeSampler(const BridgeEndpoints& ep, double M, std::size_t n_theta)
    : ep_(ep), M_(M), theta_(argmax_density_grid(M, ep, n_theta)) {}

Path MeanderBridgeSampler::generate(const TimeGrid& grid, RandomSource& rng) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(ep_.t2));
    require(std::abs(grid.t0() - ep_.t1) <= tol && std::abs(grid.T() - ep_.t2) <= tol, Errc::invalid_argument,
            "time grid must span the bridge interval");
    const double theta = sample_argmax(rng);
    const std::size_t k = std::clamp<std::size_t>(grid.nearest(theta), 1, grid.n_steps() - 1);
    return generate_at(grid, k, rng);
}

Path gen_bridge_with_max_meander(const BridgeEndpoints& ep, double M, const TimeGrid& grid, RandomSource& rng) {
    return MeanderBridgeSampler(ep, M).generate(grid, rng);
}

}  // namespace bridgex
