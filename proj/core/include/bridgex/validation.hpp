#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bridgex/bayesian.hpp"
#include "bridgex/numerics.hpp"

namespace bridgex {

/// Fixed-width histogram on [lo, hi]. Counts may be fractional: a sample that
/// sits exactly on an inner edge is split evenly between its two bins.
struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> counts;

    std::size_t n_bins() const noexcept { return counts.size(); }
    double width() const noexcept { return (hi - lo) / static_cast<double>(counts.size()); }
    double edge(std::size_t i) const noexcept { return lo + static_cast<double>(i) * width(); }
    double total() const noexcept;
    /// counts / (total * width), integrating to 1 over [lo, hi].
    std::vector<double> density() const;
};

Histogram histogram(std::span<const double> samples, double lo, double hi, std::size_t n_bins);

/// Argmax times of a batch, binned over the grid span of the first path.
Histogram histogram_argmax(std::span<const Path> paths, std::size_t n_bins);

struct TestStatistic {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};

/// Pearson chi-square of the histogram against the bin masses of density
/// (renormalized over [lo, hi]). Adjacent bins are merged until every
/// expected count reaches 5. Throws InsufficientSamples if fewer than two
/// bins remain.
TestStatistic chi_square_vs_density(const Histogram& hist, const std::function<double(double)>& density);

/// Two-sample Kolmogorov-Smirnov with the asymptotic p-value.
TestStatistic ks_two_sample(std::span<const double> x, std::span<const double> y);

/// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda) noexcept;

struct TestRecord {
    std::string id;
    double statistic = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
};

struct ValidationReport {
    std::vector<TestRecord> records;

    bool all_passed() const noexcept;
    const TestRecord* find(const std::string& id) const noexcept;
    void add(TestRecord r) { records.push_back(std::move(r)); }
    void append(const ValidationReport& other);
};

/// What a batch of constrained paths must satisfy.
struct InvariantSpec {
    ConstraintSpec constraint;
    /// Without a constraint only finiteness and endpoint pinning are checked.
    bool constrained = true;
    /// Allowed overshoot of the extremum bound (grid-detected first hits).
    double bound_tolerance = 0.0;
    /// Attainment band; the fraction of paths whose extremum lies within it
    /// must reach min_attain_rate.
    double epsilon = 0.2;
    double min_attain_rate = 0.95;
    /// Every path must hit M exactly at some node (rectified or Method 1 output).
    bool exact_attainment = false;
    /// Every node must be strictly positive (GBM output).
    bool positive = false;
    std::uint64_t seed = 0;
};

/// Records: finite, start-pinned, end-pinned (bridges), extremum-bound,
/// attainment or exact-attainment, positivity when requested.
ValidationReport invariant_suite(std::span<const Path> paths, const InvariantSpec& spec);

/// Wall-clock comparison of the two bridge generators on one configuration.
struct BenchmarkSpec {
    BridgeEndpoints ep{0.0, 2.0, 3.0, 4.0, 1.0};
    double M = 5.0;
    std::size_t n_steps = 100;
    std::size_t L_high = 10000;
    std::size_t L_low = 1000;
    double delta = 1e-3;
    double epsilon = 0.2;
    std::size_t paths_method1 = 2000;
    std::size_t paths_method2 = 20;
    std::uint64_t seed = 0;
    /// Also time both methods at 2 * n_steps (Method 2 at L_low).
    bool check_linearity = true;
    /// Also time Method 2 at L_low.
    bool check_L_scaling = true;
};

struct TimingReport {
    double method1_per_path = 0.0;
    double method2_per_path = 0.0;  // at L_high
    double method2_low_L_per_path = 0.0;
    double method1_double_n_ratio = 0.0;
    double method2_double_n_ratio = 0.0;
    double ratio() const noexcept { return method2_per_path / method1_per_path; }
    double L_ratio() const noexcept { return method2_per_path / method2_low_L_per_path; }
};

TimingReport benchmark(const BenchmarkSpec& spec);

/// Thresholds: ratio >= 100, L ratio in [5, 20], doubling ratios in [1, 3].
ValidationReport timing_checks(const TimingReport& t, const BenchmarkSpec& spec);

}  // namespace bridgex
