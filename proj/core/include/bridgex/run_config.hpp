#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bridgex/bayesian.hpp"
#include "bridgex/ou_extrema.hpp"
#include "bridgex/validation.hpp"

namespace bridgex {

/// One batch run, read from a JSON document:
///
///   {"generator": "method2",
///    "constraint": {"t0": 0, "T": 2, "a": 3, "b": 4, "M": 5, "kind": "max"},
///    "params": {"sigma": 1, "kappa": 1, "mu": 0, "c": 0},
///    "numerics": {"n_timesteps": 100, "delta": 1e-3, "epsilon": 0.2, "L": 1000},
///    "n_paths": 1000, "seed": 0, "rectify": true,
///    "ou": {"nu": "volterra"}, "gbm": {"ito_correction": false},
///    "validation": {"bins": 10, "alpha": 0.01, "min_attain_rate": 0.95},
///    "output": {"paths": "paths.csv", "report": "report.json"}}
///
/// Everything except "generator" has a default; "constraint.M" is required by
/// every constrained generator and "constraint.b" by the bridge ones.
struct RunConfig {
    std::string generator;
    ConstraintSpec constraint;
    double sigma = 1.0;
    double kappa = 1.0;
    double mu = 0.0;
    double c = 0.0;
    NumericsConfig numerics;
    NuMethod nu = NuMethod::volterra;
    bool ito_correction = false;
    std::size_t n_paths = 100;
    std::uint64_t seed = 0;
    bool rectify = true;
    std::size_t bins = 10;
    double alpha = 0.01;
    double min_attain_rate = 0.95;
    std::string paths_file = "paths.csv";
    std::string report_file = "report.json";
};

enum class EndShape { required, forbidden, optional };

struct GeneratorInfo {
    std::string id;
    bool constrained;  // needs M
    EndShape end;
    std::string summary;
};

const std::vector<GeneratorInfo>& generator_registry();
const GeneratorInfo& generator_info(const std::string& id);

/// Throws ConfigError naming the offending field.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& file);

/// Checks the generator id and the constraint shape it needs.
void check_run_config(const RunConfig& cfg);

/// Path i uses stream (seed, i), so output does not depend on the thread count.
std::vector<Path> generate_batch(const RunConfig& cfg, unsigned threads = 1);

/// Invariants for every generator plus, where a closed-form argmax law
/// exists, a chi-square test of the argmax histogram.
ValidationReport validate_batch(const RunConfig& cfg, std::span<const Path> paths);

/// Long format path_id,t,value with round-trip precision.
void write_paths_csv(std::ostream& os, std::span<const Path> paths);
std::string report_to_json(const ValidationReport& r);

/// --threads, then BRIDGEX_THREADS, then 1.
unsigned resolve_threads(std::optional<unsigned> flag);

}  // namespace bridgex
