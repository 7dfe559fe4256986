#include "bridgex/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bridgex/meander.hpp"

namespace bridgex {

double Histogram::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), 0.0); }

std::vector<double> Histogram::density() const {
    const double n = total();
    std::vector<double> d(counts.size(), 0.0);
    if (n > 0.0)
        for (std::size_t i = 0; i < counts.size(); ++i) d[i] = counts[i] / (n * width());
    return d;
}

Histogram histogram(std::span<const double> samples, double lo, double hi, std::size_t n_bins) {
    require(n_bins >= 2, Errc::invalid_argument, "histogram needs at least two bins");
    require(hi > lo, Errc::invalid_argument, "histogram range is empty");
    Histogram h{lo, hi, std::vector<double>(n_bins, 0.0)};
    const double w = h.width();
    for (double x : samples) {
        if (!(x >= lo && x <= hi)) continue;
        const double pos = (x - lo) / w;
        const double fl = std::floor(pos);
        const auto i = static_cast<std::size_t>(fl);
        if (pos == fl && i > 0 && i < n_bins) {
            h.counts[i - 1] += 0.5;
            h.counts[i] += 0.5;
        } else {
            h.counts[std::min(i, n_bins - 1)] += 1.0;
        }
    }
    return h;
}

Histogram histogram_argmax(std::span<const Path> paths, std::size_t n_bins) {
    require(!paths.empty(), Errc::invalid_argument, "no paths to bin");
    std::vector<double> t;
    t.reserve(paths.size());
    for (const auto& p : paths) t.push_back(p.grid[p.argmax()]);
    return histogram(t, paths.front().grid.t0(), paths.front().grid.T(), n_bins);
}

TestStatistic chi_square_vs_density(const Histogram& hist, const std::function<double(double)>& density) {
    const std::size_t nb = hist.n_bins();
    boost::math::quadrature::tanh_sinh<double> ts;
    std::vector<double> mass(nb);
    for (std::size_t i = 0; i < nb; ++i) mass[i] = ts.integrate(density, hist.edge(i), hist.edge(i + 1));
    const double total_mass = std::accumulate(mass.begin(), mass.end(), 0.0);
    require(total_mass > 0.0, Errc::total_mass_zero, "density has no mass on the histogram range");
    const double n = hist.total();

    std::vector<double> obs, expct;
    double o = 0.0, e = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        o += hist.counts[i];
        e += n * mass[i] / total_mass;
        if (e >= 5.0) {
            obs.push_back(o);
            expct.push_back(e);
            o = e = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (expct.empty()) {
            obs.push_back(o);
            expct.push_back(e);
        } else {
            obs.back() += o;
            expct.back() += e;
        }
    }
    if (expct.size() < 2) fail(Errc::insufficient_samples, "fewer than two bins with expected count >= 5");

    TestStatistic r;
    for (std::size_t i = 0; i < obs.size(); ++i) r.statistic += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
    r.dof = obs.size() - 1;
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(r.dof),
                                                         r.statistic));
    return r;
}

double kolmogorov_sf(double lambda) noexcept {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestStatistic ks_two_sample(std::span<const double> x, std::span<const double> y) {
    require(!x.empty() && !y.empty(), Errc::insufficient_samples, "KS test needs two non-empty samples");
    std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    TestStatistic r;
    r.statistic = d;
    r.p_value = kolmogorov_sf((en + 0.12 + 0.11 / en) * d);
    return r;
}

// ---------------------------------------------------------------- reports

bool ValidationReport::all_passed() const noexcept {
    return std::all_of(records.begin(), records.end(), [](const TestRecord& r) { return r.passed; });
}

const TestRecord* ValidationReport::find(const std::string& id) const noexcept {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

void ValidationReport::append(const ValidationReport& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
}

ValidationReport invariant_suite(std::span<const Path> paths, const InvariantSpec& spec) {
    const ConstraintSpec& c = spec.constraint;
    const bool is_max = c.kind == ExtremumKind::max;
    const std::size_t n = paths.size();
    std::size_t finite = 0, start = 0, end = 0, bounded = 0, near = 0, exact = 0, positive = 0;
    double worst_excess = 0.0;
    for (const auto& p : paths) {
        if (p.all_finite()) ++finite;
        if (p.front() == c.a) ++start;
        if (c.b && p.back() == *c.b) ++end;
        const double ext = is_max ? p.max() : p.min();
        const double excess = is_max ? ext - c.M : c.M - ext;
        worst_excess = std::max(worst_excess, excess);
        if (excess <= spec.bound_tolerance) ++bounded;
        if (std::abs(ext - c.M) <= spec.epsilon) ++near;
        if (std::find(p.values.begin(), p.values.end(), c.M) != p.values.end()) ++exact;
        if (std::all_of(p.values.begin(), p.values.end(), [](double v) { return v > 0.0; })) ++positive;
    }
    auto rec = [&](std::string id, double stat, double thr, bool ok) {
        return TestRecord{std::move(id), stat, thr, ok, n, spec.seed};
    };
    const double nn = static_cast<double>(n);
    ValidationReport r;
    r.add(rec("finite", static_cast<double>(n - finite), 0.0, finite == n));
    r.add(rec("start-pinned", static_cast<double>(n - start), 0.0, start == n));
    if (c.b) r.add(rec("end-pinned", static_cast<double>(n - end), 0.0, end == n));
    if (!spec.constrained) return r;
    r.add(rec("extremum-bound", worst_excess, spec.bound_tolerance, bounded == n));
    if (spec.exact_attainment)
        r.add(rec("exact-attainment", static_cast<double>(n - exact), 0.0, exact == n));
    else
        r.add(rec("attainment", n ? static_cast<double>(near) / nn : 0.0, spec.min_attain_rate,
                  n && static_cast<double>(near) >= spec.min_attain_rate * nn));
    if (spec.positive) r.add(rec("positivity", static_cast<double>(n - positive), 0.0, positive == n));
    return r;
}

// ---------------------------------------------------------------- timing

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double time_method1(const BenchmarkSpec& s, std::size_t n_steps) {
    const TimeGrid grid(s.ep.t1, s.ep.t2, n_steps);
    const auto t0 = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (std::size_t i = 0; i < s.paths_method1; ++i) {
        RandomSource rng = RandomSource::for_path(s.seed, i);
        sink += gen_bridge_with_max_meander(s.ep, s.M, grid, rng).values[1];
    }
    const double dt = seconds_since(t0);
    if (!std::isfinite(sink)) fail(Errc::invalid_argument, "benchmark produced non-finite values");
    return dt / static_cast<double>(s.paths_method1);
}

double time_method2(const BenchmarkSpec& s, std::size_t n_steps, std::size_t L) {
    ConstraintSpec c{s.ep.t1, s.ep.t2, s.ep.x1, s.ep.x2, s.M, ExtremumKind::max};
    NumericsConfig cfg;
    cfg.n_timesteps = n_steps;
    cfg.L = L;
    cfg.delta = s.delta;
    cfg.epsilon = s.epsilon;
    const BrownianDynamics dyn(s.ep.sigma);
    const auto t0 = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (std::size_t i = 0; i < s.paths_method2; ++i) {
        RandomSource rng = RandomSource::for_path(s.seed, i);
        sink += gen_constrained_bayesian(c, dyn, cfg, rng).values[1];
    }
    const double dt = seconds_since(t0);
    if (!std::isfinite(sink)) fail(Errc::invalid_argument, "benchmark produced non-finite values");
    return dt / static_cast<double>(s.paths_method2);
}

}  // namespace

TimingReport benchmark(const BenchmarkSpec& spec) {
    require(spec.paths_method1 > 0 && spec.paths_method2 > 0, Errc::invalid_argument, "benchmark needs paths");
    // Untimed pass first, so page faults and cold caches do not land on
    // whichever configuration happens to be timed first.
    BenchmarkSpec warm = spec;
    warm.paths_method1 = std::min<std::size_t>(spec.paths_method1, 200);
    warm.paths_method2 = std::min<std::size_t>(spec.paths_method2, 2);
    time_method1(warm, 2 * spec.n_steps);
    time_method2(warm, spec.n_steps, spec.L_low);
    TimingReport t;
    t.method1_per_path = time_method1(spec, spec.n_steps);
    t.method2_per_path = time_method2(spec, spec.n_steps, spec.L_high);
    if (spec.check_L_scaling || spec.check_linearity)
        t.method2_low_L_per_path = time_method2(spec, spec.n_steps, spec.L_low);
    if (spec.check_linearity) {
        t.method1_double_n_ratio = time_method1(spec, 2 * spec.n_steps) / t.method1_per_path;
        t.method2_double_n_ratio = time_method2(spec, 2 * spec.n_steps, spec.L_low) / t.method2_low_L_per_path;
    }
    return t;
}

ValidationReport timing_checks(const TimingReport& t, const BenchmarkSpec& spec) {
    ValidationReport r;
    auto add = [&](std::string id, double stat, double thr, bool ok, std::size_t n) {
        r.add(TestRecord{std::move(id), stat, thr, ok, n, spec.seed});
    };
    add("method-ratio", t.ratio(), 100.0, t.ratio() >= 100.0, spec.paths_method2);
    if (spec.check_L_scaling)
        add("L-scaling", t.L_ratio(), 5.0, t.L_ratio() >= 5.0 && t.L_ratio() <= 20.0, spec.paths_method2);
    if (spec.check_linearity) {
        const auto lin = [](double x) { return x >= 1.0 && x <= 3.0; };
        add("method1-linear-in-N", t.method1_double_n_ratio, 2.0, lin(t.method1_double_n_ratio), spec.paths_method1);
        add("method2-linear-in-N", t.method2_double_n_ratio, 2.0, lin(t.method2_double_n_ratio), spec.paths_method2);
    }
    return r;
}

}  // namespace bridgex
