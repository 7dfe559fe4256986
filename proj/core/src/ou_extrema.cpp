#include "bridgex/ou_extrema.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

namespace bridgex {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kInvSqrtPi = std::numbers::inv_sqrtpi;

// Largest normalized horizon handled; theta = 1 - e^{-s} stays clear of 1.
constexpr double kMaxNormalizedTime = 20.0;

double theta_of(double s) { return -std::expm1(-std::min(s, kMaxNormalizedTime)); }

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

// Moments int_0^2 s^k q(s) ds of the three interpolation polynomials, for the
// series form of volterra_abc used far from the singularity.
struct AbcMoments {
    static constexpr int kTerms = 24;
    std::array<double, kTerms> a{}, b{}, g{}, c{};

    AbcMoments() {
        double coef = 1.0;
        for (int k = 0; k < kTerms; ++k) {
            const double p1 = std::ldexp(1.0, k + 1) / (k + 1);
            const double p2 = std::ldexp(1.0, k + 2) / (k + 2);
            const double p3 = std::ldexp(1.0, k + 3) / (k + 3);
            a[k] = 2.0 * p1 - 3.0 * p2 + p3;  // (1-s)(2-s)
            b[k] = 2.0 * p2 - p3;             // s(2-s)
            g[k] = p3 - p2;                   // s(s-1)
            c[k] = coef;                      // binomial series of (1-u)^{-1/2}
            coef *= (2.0 * k + 1.0) / (2.0 * k + 2.0);
        }
    }
};

const AbcMoments& abc_moments() {
    static const AbcMoments m;
    return m;
}

}  // namespace

// ---------------------------------------------------------------- coordinates

NormalizedOUCoords::NormalizedOUCoords(const OUParams& params) : p(params) {
    p.validate();
    root_k_over_s_ = std::sqrt(p.kappa) / p.sigma;
}

LinearDiffusionSpec scale_and_speed(const OUParams& p) {
    p.validate();
    return LinearDiffusionSpec{p};
}

double LinearDiffusionSpec::S_prime(double x) const noexcept {
    return std::exp(p.kappa / (p.sigma * p.sigma) * (x * x - 2.0 * p.mu * x));
}

double LinearDiffusionSpec::S(double x) const {
    if (x == 0.0) return 0.0;
    const double sign = x > 0.0 ? 1.0 : -1.0;
    return sign * integrate_adaptive([this](double y) { return S_prime(y); }, std::min(0.0, x), std::max(0.0, x),
                                     1e-12);
}

double LinearDiffusionSpec::m(double x) const noexcept {
    const double s2 = p.sigma * p.sigma;
    return 2.0 / s2 * std::exp(2.0 * p.kappa / s2 * (p.mu * x - 0.5 * x * x));
}

// ---------------------------------------------------------------- block-by-block solver

AbcWeights volterra_abc(double x, double y, double z) {
    double d = x - y;
    double e = d - 2.0 * z;
    if (d < -1e-12 || e < -1e-12) {
        std::ostringstream os;
        os << "volterra_abc radicand negative: x-y=" << d << ", x-y-2z=" << e;
        fail(Errc::domain_error, os.str());
    }
    d = std::max(d, 0.0);
    e = std::max(e, 0.0);
    if (z == 0.0) return {0.0, 0.0, 0.0};

    if (d > 20.0 * z) {
        // Expand 1/sqrt(d - s z) in powers of s z / d (ratio below 0.1).
        const auto& mo = abc_moments();
        const double u = z / d;
        double al = 0.0, be = 0.0, ga = 0.0, pw = 1.0;
        for (int k = 0; k < AbcMoments::kTerms; ++k) {
            al += mo.c[k] * pw * mo.a[k];
            be += mo.c[k] * pw * mo.b[k];
            ga += mo.c[k] * pw * mo.g[k];
            pw *= u;
        }
        const double pre = z / std::sqrt(d);
        return {0.5 * pre * al, pre * be, 0.5 * pre * ga};
    }

    const double q = d / z;
    auto prim = [&](double xi, double k1, double k0) {
        const double xi2 = xi * xi;
        return xi * (xi2 * xi2 / (5.0 * z * z) + (-2.0 * d / (z * z) + k1 / z) * xi2 / 3.0 + (q * q - k1 * q + k0));
    };
    const double hi = std::sqrt(e);
    const double lo = std::sqrt(d);
    return {-(prim(hi, 3.0, 2.0) - prim(lo, 3.0, 2.0)), 2.0 * (prim(hi, 2.0, 0.0) - prim(lo, 2.0, 0.0)),
            -(prim(hi, 1.0, 0.0) - prim(lo, 1.0, 0.0))};
}

double volterra_weights(std::size_t n, std::size_t i, double h, std::span<const double> nodes) {
    require(i < n && n < nodes.size(), Errc::invalid_argument, "volterra weight index out of range");
    const std::size_t upper = 2 * ((n - 1) / 2);
    if (i > upper) return 0.0;
    const double tn = nodes[n];
    if (i % 2 == 1) return volterra_abc(tn, nodes[i] - h, h).beta;
    double w = 0.0;
    if (i < upper) w += volterra_abc(tn, nodes[i], h).alpha;
    if (i > 0) w += volterra_abc(tn, nodes[i] - 2.0 * h, h).gamma;
    return w;
}

double volterra_kernel(double b, double theta, double tp) noexcept {
    const double s = 2.0 - theta - tp;
    return std::exp(-b * b * (theta - tp) / s) * (1.0 - tp) / (s * std::sqrt(s));
}

VolterraSolution solve_volterra_nu(double b, double theta_max, std::size_t n_blocks) {
    require(n_blocks >= 1, Errc::invalid_argument, "need at least one block");
    require(theta_max > 0.0 && theta_max < 1.0, Errc::invalid_argument, "theta_max must lie in (0, 1)");
    VolterraSolution sol;
    sol.b = b;
    const std::size_t n_nodes = 2 * n_blocks + 1;
    sol.h = theta_max / static_cast<double>(2 * n_blocks);
    const double h = sol.h;
    sol.nodes.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) sol.nodes[i] = static_cast<double>(i) * h;
    sol.nodes.back() = theta_max;
    sol.F.assign(n_nodes, 0.0);
    auto& F = sol.F;
    const auto& t = sol.nodes;
    F[0] = 1.0;
    const double c = 2.0 * b * kInvSqrtPi;
    auto K = [&](double x, double y) { return volterra_kernel(b, x, y); };

    for (std::size_t m = 0; m < n_blocks; ++m) {
        const std::size_t n1 = 2 * m + 1, n2 = 2 * m + 2, j0 = 2 * m;
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < j0 + (m > 0 ? 1 : 0); ++i) {
            s1 += volterra_weights(n1, i, h, t) * K(t[n1], t[i]) * F[i];
            s2 += volterra_weights(n2, i, h, t) * K(t[n2], t[i]) * F[i];
        }
        const AbcWeights w1 = volterra_abc(t[n1], t[j0], 0.5 * h);
        const AbcWeights w2 = volterra_abc(t[n2], t[j0], h);
        const double bk = w1.beta * K(t[n1], t[j0] + 0.5 * h);

        const double a11 = 1.0 - c * (0.75 * bk + w1.gamma * K(t[n1], t[n1]));
        const double a12 = c * bk / 8.0;
        const double r1 = 1.0 + c * (s1 + w1.alpha * K(t[n1], t[j0]) * F[j0] + 0.375 * bk * F[j0]);
        const double a21 = -c * w2.beta * K(t[n2], t[n1]);
        const double a22 = 1.0 - c * w2.gamma * K(t[n2], t[n2]);
        const double r2 = 1.0 + c * (s2 + w2.alpha * K(t[n2], t[j0]) * F[j0]);

        const double det = a11 * a22 - a12 * a21;
        if (std::abs(det) < 1e-300) {
            std::ostringstream os;
            os << "block " << m << " system is singular";
            fail(Errc::singular_block, os.str());
        }
        F[n1] = (r1 * a22 - a12 * r2) / det;
        F[n2] = (a11 * r2 - a21 * r1) / det;
    }
    return sol;
}

double VolterraSolution::operator()(double theta) const noexcept {
    if (theta <= 0.0) return F.front();
    if (theta >= nodes.back()) return F.back();
    const std::size_t n_blocks = (nodes.size() - 1) / 2;
    const std::size_t j = std::min(static_cast<std::size_t>(theta / (2.0 * h)), n_blocks - 1);
    const double s = (theta - nodes[2 * j]) / h;
    return 0.5 * F[2 * j] * (1.0 - s) * (2.0 - s) + F[2 * j + 1] * s * (2.0 - s) + 0.5 * F[2 * j + 2] * s * (s - 1.0);
}

void VolterraSolution::write_csv(std::ostream& os) const {
    os << "theta,F\n";
    os.precision(17);
    for (std::size_t i = 0; i < nodes.size(); ++i) os << nodes[i] << ',' << F[i] << '\n';
}

double nu_abel_approx(double vartheta, double b) noexcept {
    return 2.0 * std::exp(0.5 * b * b * vartheta) * normal_cdf(b * std::sqrt(vartheta));
}

NuFunction nu_for_level(double level, double theta_max, NuMethod method, std::size_t n_blocks) {
    if (method == NuMethod::abel) return [level](double th) { return nu_abel_approx(th, -level); };
    const double top = std::min(std::max(theta_max, 1e-6), theta_of(kMaxNormalizedTime));
    auto sol = std::make_shared<const VolterraSolution>(solve_volterra_nu(-level, top, n_blocks));
    return [sol](double th) { return (*sol)(th); };
}

// ---------------------------------------------------------------- first passage

namespace {

/// Quadrature nodes in th' for the double-layer integral at fixed th, with the
/// weights already carrying dth'. Near th' = th the integrand peaks at a
/// distance set by (level - x)^2, so the upper half uses w^2 = th - th' on
/// geometrically shrinking panels; the lower half uses v^2 = th' to absorb
/// the sqrt behaviour of nu at 0.
struct ThetaRule {
    std::vector<double> tp, gap, weight, nu;
};

constexpr int kGeomPanels = 44;
constexpr int kLowerPanels = 4;

ThetaRule theta_rule(double th, const NuFunction& nu) {
    using GL = boost::math::quadrature::gauss<double, 8>;
    const auto& ab = GL::abscissa();
    const auto& wt = GL::weights();
    ThetaRule r;
    const std::size_t n_nodes = 8 * (kGeomPanels + kLowerPanels);
    r.tp.reserve(n_nodes);
    r.gap.reserve(n_nodes);
    r.weight.reserve(n_nodes);
    auto panel = [&](double lo, double hi, bool upper) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        auto push = [&](double y, double w) {
            const double y2 = y * y;
            r.tp.push_back(upper ? th - y2 : y2);
            r.gap.push_back(upper ? y2 : th - y2);
            r.weight.push_back(2.0 * y * w * h);
        };
        for (std::size_t i = 0; i < ab.size(); ++i) {
            if (ab[i] == 0.0) {
                push(c, wt[i]);
            } else {
                push(c - h * ab[i], wt[i]);
                push(c + h * ab[i], wt[i]);
            }
        }
    };
    const double W = std::sqrt(0.5 * th);
    double hi = W;
    for (int i = 0; i < kGeomPanels; ++i) {
        const double lo = i + 1 == kGeomPanels ? 0.0 : 0.5 * hi;
        panel(lo, hi, true);
        hi = lo;
    }
    for (int i = 0; i < kLowerPanels; ++i)
        panel(W * i / kLowerPanels, W * (i + 1) / kLowerPanels, false);
    r.nu.resize(r.tp.size());
    for (std::size_t i = 0; i < r.tp.size(); ++i) r.nu[i] = nu(r.tp[i]);
    return r;
}

double survival_from_rule(const ThetaRule& r, double th, double x, double level) {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.tp.size(); ++i) {
        const double tp = r.tp[i];
        const double D = r.gap[i] * (2.0 - th - tp);
        const double d = level * (1.0 - tp) - x * (1.0 - th);
        const double q = d * d / D;
        if (q > 745.0) continue;
        acc += r.weight[i] * r.nu[i] * (1.0 - tp) * d * std::exp(-q) / (D * std::sqrt(D));
    }
    return std::clamp(1.0 - 2.0 * kInvSqrtPi * acc, 0.0, 1.0);
}

}  // namespace

double ou_survival(double s, double x, double level, const NuFunction& nu) {
    if (x >= level) return 0.0;
    if (s <= 0.0) return 1.0;
    const double th = theta_of(s);
    return survival_from_rule(theta_rule(th, nu), th, x, level);
}

double hitting_time_density(double t, double a, double b, const NuFunction& nu) {
    require(t > 0.0, Errc::invalid_argument, "hitting time must be positive");
    if (a >= b) return 0.0;
    const double th = theta_of(t);
    const double om = 1.0 - th;
    const ThetaRule r = theta_rule(th, nu);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.tp.size(); ++i) {
        const double tp = r.tp[i];
        const double D = r.gap[i] * (2.0 - th - tp);
        const double d = b * (1.0 - tp) - a * om;
        const double q = d * d / D;
        if (q > 745.0) continue;
        const double D2 = D * D;
        const double sD = std::sqrt(D);
        acc += r.weight[i] * r.nu[i] * (1.0 - tp) * std::exp(-q) *
               (om * d * (2.0 * d * d - 3.0 * D) / (D2 * D * sD) + a * (D - 2.0 * d * d) / (D2 * sD));
    }
    return std::max(0.0, 2.0 * kInvSqrtPi * om * acc);
}

double ou_transition_density(double s, double x, double y) noexcept {
    const double var = -0.5 * std::expm1(-2.0 * s);
    const double d = y - x * std::exp(-s);
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

std::vector<std::vector<double>> survival_rows(double level, std::span<const double> xs, double ds,
                                               std::size_t n_cells, const NuFunction& nu) {
    // Row starts at 1 even on the level itself: the passage happens in the first cell.
    std::vector<std::vector<double>> rows(xs.size(), std::vector<double>(n_cells + 1, 1.0));
    for (std::size_t j = 1; j <= n_cells; ++j) {
        const double th = theta_of(static_cast<double>(j) * ds);
        const ThetaRule rule = theta_rule(th, nu);
        for (std::size_t k = 0; k < xs.size(); ++k)
            rows[k][j] = xs[k] >= level ? 0.0 : survival_from_rule(rule, th, xs[k], level);
    }
    return rows;
}

// ---------------------------------------------------------------- right-hand factors

namespace {

/// Cell averages of p_r(level -> b) over r in [i ds, (i + 1) ds].
std::vector<double> transition_cell_averages(double level, double b, double ds, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = static_cast<double>(i) * ds;
        out[i] = boost::math::quadrature::gauss<double, 7>::integrate(
                     [&](double r) { return r > 0.0 ? ou_transition_density(r, level, b) : 0.0; }, lo, lo + ds) /
                 ds;
    }
    return out;
}

/// Cell averages of G(w) = -du/dx at the level, from rows at level - eps and
/// level - 2 eps. G ~ sqrt(2 / (pi w)) near 0, so the first cell uses 2 G(ds).
std::vector<double> max_kernel_cell_averages(const std::vector<double>& u1, const std::vector<double>& u2,
                                             double eps, std::size_t n) {
    std::vector<double> G(n + 1);
    for (std::size_t j = 1; j <= n; ++j) G[j] = (4.0 * u1[j] - u2[j]) / (2.0 * eps);
    std::vector<double> out(n);
    out[0] = 2.0 * G[1];
    for (std::size_t i = 1; i < n; ++i) out[i] = 0.5 * (G[i] + G[i + 1]);
    return out;
}

/// Right factors at horizon J cells from one survival row, in normalized units.
struct RawFactors {
    double bound;
    double max_density;
};

struct KernelSet {
    double level;
    std::optional<double> b;
    double ds;
    std::vector<double> trans;   // bridge: p cell averages
    std::vector<double> drop_b;  // bridge: survival drops of the row at b
    std::vector<double> gbar;    // open: G cell averages
};

/// int_0^ds u(s, x) ds per row, on a geometric sub-grid toward s = 0.
std::vector<double> first_cell_integrals(double level, std::span<const double> xs, double ds, const NuFunction& nu) {
    constexpr int kSub = 40;
    std::vector<double> s(kSub + 1);
    for (int i = 0; i <= kSub; ++i) s[i] = ds * std::exp2(-0.5 * i);
    std::vector<ThetaRule> rules;
    rules.reserve(s.size());
    for (double si : s) rules.push_back(theta_rule(theta_of(si), nu));
    std::vector<double> out(xs.size(), 0.0);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] >= level) continue;
        double prev = survival_from_rule(rules[kSub], theta_of(s[kSub]), xs[k], level);
        double acc = 0.5 * s[kSub] * (1.0 + prev);
        for (int i = kSub - 1; i >= 0; --i) {
            const double cur = survival_from_rule(rules[i], theta_of(s[i]), xs[k], level);
            acc += 0.5 * (s[i] - s[i + 1]) * (cur + prev);
            prev = cur;
        }
        out[k] = acc;
    }
    return out;
}

/// int_0^tau f(s) k(tau - s) ds for f = -du/ds, with k given by cell averages.
/// Cell 0 carries the passage mass of rows that start near the level, so it
/// gets a first-order kernel slope weighted by the mass position inside it.
double stieltjes(const std::vector<double>& u, double i0, const std::vector<double>& kbar, std::size_t J, double ds) {
    double acc = 0.0;
    for (std::size_t j = 0; j < J; ++j) acc += (u[j] - u[j + 1]) * kbar[J - 1 - j];
    if (J >= 3) {
        const double slope = (kbar[J - 2] - kbar[J - 1]) / ds;
        const double first_moment = i0 - ds * u[1];
        acc += slope * (first_moment - 0.5 * ds * (u[0] - u[1]));
    }
    return acc;
}

RawFactors combine(const std::vector<double>& u, double i0, double x, std::size_t J, const KernelSet& ks) {
    const double tau = static_cast<double>(J) * ks.ds;
    if (!ks.b) return {u[J], std::max(stieltjes(u, i0, ks.gbar, J, ks.ds), 0.0)};
    const double p = ou_transition_density(tau, x, *ks.b);
    const double jp = stieltjes(u, i0, ks.trans, J, ks.ds);
    const double jf = stieltjes(u, i0, ks.drop_b, J, ks.ds) / ks.ds;
    const double bound = std::clamp(1.0 - jp / p, 0.0, 1.0);
    const double dens = 2.0 * std::exp(ks.level * ks.level - *ks.b * *ks.b) * jf / p;
    return {bound, std::max(dens, 0.0)};
}

KernelSet make_kernels(double level, std::optional<double> b, double ds, std::size_t n_cells, const NuFunction& nu) {
    KernelSet ks{level, b, ds, {}, {}, {}};
    if (b) {
        ks.trans = transition_cell_averages(level, *b, ds, n_cells);
        const double xb[] = {*b};
        const auto rb = survival_rows(level, xb, ds, n_cells, nu);
        ks.drop_b.resize(n_cells);
        for (std::size_t j = 0; j < n_cells; ++j) ks.drop_b[j] = rb[0][j] - rb[0][j + 1];
    } else {
        const double eps = 0.01 * std::sqrt(ds);
        const double xe[] = {level - eps, level - 2.0 * eps};
        const auto re = survival_rows(level, xe, ds, n_cells, nu);
        ks.gbar = max_kernel_cell_averages(re[0], re[1], eps, n_cells);
    }
    return ks;
}

constexpr std::size_t kDirectCells = 400;

}  // namespace

struct OUDynamics::Tables {
    double t0, T, a, M, dt;
    std::optional<double> b;
    std::size_t n_steps;
    double delta;
    double xmin;
    double level;
    double low;
    std::vector<double> xs;                    // normalized, ascending, last = level
    std::vector<std::vector<double>> bound;    // [m][k], m = remaining steps
    std::vector<std::vector<double>> max_den;  // normalized units

    bool matches_right(double M_, double t1, double t2, std::optional<double> x2, std::size_t& m) const {
        if (M_ != M || std::abs(t2 - T) > 1e-12 * std::max(1.0, std::abs(T))) return false;
        if (x2.has_value() != b.has_value() || (b && *x2 != *b)) return false;
        const double steps = (T - t1) / dt;
        const double r = std::round(steps);
        if (std::abs(steps - r) > 1e-6 || r < 1.0 || r > static_cast<double>(n_steps - 1)) return false;
        m = static_cast<std::size_t>(r);
        return true;
    }

    void lookup(double z, std::size_t m, double& bnd, double& den) const {
        const std::size_t K = xs.size();
        const double span = level - low;
        const double r = std::sqrt(std::clamp((level - z) / span, 0.0, 1.0));
        const double kf = static_cast<double>(K - 1) * (1.0 - r);
        std::size_t k = std::min(static_cast<std::size_t>(kf), K - 2);
        while (k > 0 && xs[k] > z) --k;
        while (k + 2 < K && xs[k + 1] < z) ++k;
        const double f = std::clamp((z - xs[k]) / (xs[k + 1] - xs[k]), 0.0, 1.0);
        bnd = (1.0 - f) * bound[m][k] + f * bound[m][k + 1];
        den = (1.0 - f) * max_den[m][k] + f * max_den[m][k + 1];
    }
};

OUDynamics::OUDynamics(const OUParams& p, OUOptions opt) : p_(p), opt_(opt), nc_(p) {
    require(opt_.x_nodes >= 8 && opt_.refine >= 1 && opt_.nu_blocks >= 4, Errc::invalid_argument,
            "OU table options too small");
}

std::shared_ptr<const OUDynamics> ou_dynamics(const OUParams& p, OUOptions opt) {
    return std::make_shared<OUDynamics>(p, opt);
}

OUDynamics::Factors OUDynamics::right_factors(double M, double t1, double t2, double x1,
                                              std::optional<double> x2) const {
    const double level = nc_.level(M);
    const double z = nc_.level(x1);
    const std::optional<double> zb = x2 ? std::optional<double>(nc_.level(*x2)) : std::nullopt;
    const double jac = nc_.jacobian();
    std::size_t m = 0;
    if (tables_ && tables_->matches_right(M, t1, t2, x2, m)) {
        if (z >= level) return {kNegInf, kNegInf};
        double bnd = 0.0, den = 0.0;
        tables_->lookup(z, m, bnd, den);
        return {safe_log(bnd), safe_log(den * jac)};
    }
    if (z >= level || (zb && *zb >= level)) return {kNegInf, kNegInf};
    const double tau = nc_.time(t2 - t1);
    const double ds = tau / static_cast<double>(kDirectCells);
    const NuFunction nu = nu_for_level(level, theta_of(tau), opt_.nu, opt_.nu_blocks);
    const KernelSet ks = make_kernels(level, zb, ds, kDirectCells, nu);
    const double xz[] = {z};
    const auto row = survival_rows(level, xz, ds, kDirectCells, nu);
    const auto i0 = first_cell_integrals(level, xz, ds, nu);
    const RawFactors rf = combine(row[0], i0[0], z, kDirectCells, ks);
    return {safe_log(rf.bound), safe_log(rf.max_density * jac)};
}

static bool is_short(double len, double dt) { return dt > 0.0 && len <= dt * (1.0 + 1e-9); }

double OUDynamics::log_density_max(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    if (x2 && tables_ && is_short(t2 - t1, tables_->dt))
        return log_bb_max_density(M, BridgeEndpoints{t1, t2, x1, *x2, p_.sigma});
    return right_factors(M, t1, t2, x1, x2).log_max;
}

double OUDynamics::log_prob_bound(double M, double t1, double t2, double x1, std::optional<double> x2) const {
    if (x2 && tables_ && is_short(t2 - t1, tables_->dt))
        return log_bb_max_bound_prob(M, BridgeEndpoints{t1, t2, x1, *x2, p_.sigma});
    return right_factors(M, t1, t2, x1, x2).log_bound;
}

double OUDynamics::log_density_increment(double dX, double t, double dt, double x, double T,
                                         std::optional<double> b) const {
    const double mean = b ? ou_bridge_drift(p_, x - p_.mu, *b - p_.mu, T - t) * dt : p_.kappa * (p_.mu - x) * dt;
    const double var = p_.sigma * p_.sigma * dt;
    const double d = dX - mean;
    return -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
}

std::shared_ptr<const Dynamics> OUDynamics::mirrored() const {
    return std::make_shared<OUDynamics>(OUParams{p_.kappa, -p_.mu, p_.sigma}, opt_);
}

std::optional<double> OUDynamics::xmin_closed_form(const ConstraintSpec& spec, double) const {
    // Tables remember the cutoff they were built with.
    if (tables_ && spec.t0 == tables_->t0 && spec.T == tables_->T && spec.a == tables_->a && spec.M == tables_->M &&
        spec.b == tables_->b)
        return tables_->xmin;
    return std::nullopt;
}

std::shared_ptr<const Dynamics> OUDynamics::prepared(const ConstraintSpec& spec, const NumericsConfig& cfg) const {
    const Key key{spec.t0, spec.T, spec.a, spec.M, spec.b.has_value(), spec.b.value_or(0.0), cfg.n_timesteps,
                  cfg.delta};
    if (tables_ && tables_->t0 == spec.t0 && tables_->T == spec.T && tables_->a == spec.a && tables_->M == spec.M &&
        tables_->b == spec.b && tables_->n_steps == cfg.n_timesteps && tables_->delta == cfg.delta)
        return std::shared_ptr<const Dynamics>(std::shared_ptr<const Dynamics>(), this);
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    auto tb = std::make_shared<Tables>();
    tb->t0 = spec.t0;
    tb->T = spec.T;
    tb->a = spec.a;
    tb->M = spec.M;
    tb->b = spec.b;
    tb->n_steps = cfg.n_timesteps;
    tb->delta = cfg.delta;
    tb->dt = (spec.T - spec.t0) / static_cast<double>(cfg.n_timesteps);
    if (!(p_.kappa * tb->dt < 1.0)) fail(Errc::unstable_step, "kappa * dt must be below 1");
    // The cutoff only needs a few digits; a coarse nu keeps the Brent search cheap.
    const OUDynamics coarse(p_, OUOptions{opt_.nu, opt_.x_nodes, opt_.refine, std::min<std::size_t>(opt_.nu_blocks, 200)});
    tb->xmin = xmin_numeric(coarse, spec, cfg.delta);
    tb->level = nc_.level(spec.M);
    tb->low = std::min(nc_.level(tb->xmin), nc_.level(spec.a)) - 0.5;

    const std::size_t K = opt_.x_nodes;
    tb->xs.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double r = static_cast<double>(K - 1 - k) / static_cast<double>(K - 1);
        tb->xs[k] = tb->level - (tb->level - tb->low) * r * r;
    }
    tb->xs.back() = tb->level;

    const std::size_t N = cfg.n_timesteps;
    const double ds = nc_.time(tb->dt) / static_cast<double>(opt_.refine);
    const std::size_t n_cells = opt_.refine * (N - 1);
    const NuFunction nu =
        nu_for_level(tb->level, theta_of(ds * static_cast<double>(n_cells)), opt_.nu, opt_.nu_blocks);
    const std::optional<double> zb = spec.b ? std::optional<double>(nc_.level(*spec.b)) : std::nullopt;
    const KernelSet ks = make_kernels(tb->level, zb, ds, n_cells, nu);
    const auto rows = survival_rows(tb->level, tb->xs, ds, n_cells, nu);
    const auto i0 = first_cell_integrals(tb->level, tb->xs, ds, nu);

    tb->bound.assign(N, std::vector<double>(K, 0.0));
    tb->max_den.assign(N, std::vector<double>(K, 0.0));
    for (std::size_t m = 1; m < N; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            const RawFactors rf = combine(rows[k], i0[k], tb->xs[k], opt_.refine * m, ks);
            tb->bound[m][k] = rf.bound;
            tb->max_den[m][k] = rf.max_density;
        }
    }

    auto out = std::make_shared<OUDynamics>(p_, opt_);
    out->tables_ = std::move(tb);
    cache_.emplace(key, out);
    return out;
}

// ---------------------------------------------------------------- public densities

double ou_max_density(double M, const BridgeEndpoints& ep, const OUParams& p, OUMode mode, NuMethod method) {
    ep.validate();
    if (mode == OUMode::bridge && !(M > ep.x1 && M > ep.x2))
        fail(Errc::invalid_extremum, "bridge maximum must exceed both endpoints");
    if (mode == OUMode::open && !(M > ep.x1)) fail(Errc::invalid_extremum, "maximum must exceed the start value");
    const OUParams q{p.kappa, p.mu, ep.sigma};
    OUDynamics dyn(q, OUOptions{method});
    const std::optional<double> x2 = mode == OUMode::bridge ? std::optional<double>(ep.x2) : std::nullopt;
    return std::exp(dyn.log_density_max(M, ep.t1, ep.t2, ep.x1, x2));
}

double ou_max_bound_prob(double M, const BridgeEndpoints& ep, const OUParams& p, OUMode mode, NuMethod method) {
    ep.validate();
    if (M <= ep.x1 || (mode == OUMode::bridge && M <= ep.x2)) return 0.0;
    const OUParams q{p.kappa, p.mu, ep.sigma};
    OUDynamics dyn(q, OUOptions{method});
    const std::optional<double> x2 = mode == OUMode::bridge ? std::optional<double>(ep.x2) : std::nullopt;
    return std::exp(dyn.log_prob_bound(M, ep.t1, ep.t2, ep.x1, x2));
}

}  // namespace bridgex
