#include "bridgex/processes.hpp"

namespace bridgex {

void OUParams::validate() const {
    require(kappa > 0.0 && std::isfinite(kappa), Errc::invalid_argument, "kappa must be positive");
    require(std::isfinite(mu), Errc::invalid_argument, "mu must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), Errc::invalid_argument, "sigma must be positive");
}

// -kappa x + 2 kappa (b e^{kappa(t+T)} - x e^{2 kappa t}) / (e^{2 kappa T} - e^{2 kappa t}),
// divided through by e^{2 kappa T} so nothing overflows for long horizons.
double ou_bridge_drift(const OUParams& p, double x, double target, double r) noexcept {
    const double k = p.kappa;
    const double e1 = std::exp(-k * r);
    const double denom = -std::expm1(-2.0 * k * r);
    return -k * x + 2.0 * k * (target * e1 - x * e1 * e1) / denom;
}

}  // namespace bridgex
