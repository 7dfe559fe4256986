#include "bridgex/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "bridgex/drift_gbm.hpp"
#include "bridgex/meander.hpp"
#include "bridgex/processes.hpp"

namespace bridgex {

using nlohmann::json;

// ---------------------------------------------------------------- registry

const std::vector<GeneratorInfo>& generator_registry() {
    static const std::vector<GeneratorInfo> reg{
        {"method1", true, EndShape::required, "Brownian bridge with given extremum, meander construction"},
        {"method2", true, EndShape::optional, "Brownian path with given extremum, incremental Bayesian generator"},
        {"reflection", true, EndShape::forbidden, "open Brownian path with given extremum, bridge plus reflection"},
        {"ou-bridge-max", true, EndShape::required, "OU bridge with given extremum"},
        {"ou-open-max", true, EndShape::forbidden, "open OU path with given extremum"},
        {"drift-open-max", true, EndShape::forbidden, "open drifted Brownian path with given extremum"},
        {"drift-bridge-max", true, EndShape::required, "drifted Brownian bridge with given extremum"},
        {"gbm-bridge-max", true, EndShape::required, "geometric Brownian bridge with given maximum"},
        {"gbm-open-max", true, EndShape::forbidden, "open geometric Brownian path with given maximum"},
        {"wiener", false, EndShape::forbidden, "Wiener path"},
        {"brownian-bridge", false, EndShape::required, "Brownian bridge"},
        {"ou", false, EndShape::forbidden, "OU path"},
        {"ou-bridge", false, EndShape::required, "OU bridge"},
    };
    return reg;
}

const GeneratorInfo& generator_info(const std::string& id) {
    for (const auto& g : generator_registry())
        if (g.id == id) return g;
    fail(Errc::config_error, "generator: unknown id '" + id + "'");
}

// ---------------------------------------------------------------- parsing

namespace {

[[noreturn]] void config_fail(const std::string& field, const std::string& what) {
    fail(Errc::config_error, field + ": " + what);
}

template <class T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
    if (!obj.contains(key)) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!obj.at(key).is_number_unsigned()) config_fail(path + key, "must be a non-negative integer");
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_fail(path + key, "wrong type");
    }
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    if (!root.at(key).is_object()) config_fail(key, "must be an object");
    return root.at(key);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Errc::config_error, std::string("config: not valid JSON (") + e.what() + ")");
    }
    if (!root.is_object()) config_fail("config", "top level must be an object");

    RunConfig cfg;
    if (!root.contains("generator")) config_fail("generator", "missing field 'generator'");
    read(root, "generator", "", cfg.generator);
    const GeneratorInfo& info = generator_info(cfg.generator);

    const json& c = section(root, "constraint");
    read(c, "t0", "constraint.", cfg.constraint.t0);
    read(c, "T", "constraint.", cfg.constraint.T);
    read(c, "a", "constraint.", cfg.constraint.a);
    if (c.contains("b") && !c.at("b").is_null()) {
        double b = 0.0;
        read(c, "b", "constraint.", b);
        cfg.constraint.b = b;
    }
    if (info.constrained) {
        if (!c.contains("M")) config_fail("M", "missing field 'M' (constraint.M) for generator " + cfg.generator);
        read(c, "M", "constraint.", cfg.constraint.M);
    }
    std::string kind = "max";
    read(c, "kind", "constraint.", kind);
    if (kind == "max")
        cfg.constraint.kind = ExtremumKind::max;
    else if (kind == "min")
        cfg.constraint.kind = ExtremumKind::min;
    else
        config_fail("constraint.kind", "expected 'max' or 'min'");

    const json& p = section(root, "params");
    read(p, "sigma", "params.", cfg.sigma);
    read(p, "kappa", "params.", cfg.kappa);
    read(p, "mu", "params.", cfg.mu);
    read(p, "c", "params.", cfg.c);

    const json& n = section(root, "numerics");
    read(n, "n_timesteps", "numerics.", cfg.numerics.n_timesteps);
    read(n, "delta", "numerics.", cfg.numerics.delta);
    read(n, "epsilon", "numerics.", cfg.numerics.epsilon);
    read(n, "L", "numerics.", cfg.numerics.L);
    read(n, "per_step_xmin", "numerics.", cfg.numerics.per_step_xmin);
    read(n, "sample_branch", "numerics.", cfg.numerics.sample_branch);

    read(root, "n_paths", "", cfg.n_paths);
    read(root, "seed", "", cfg.seed);
    read(root, "rectify", "", cfg.rectify);

    const json& ou = section(root, "ou");
    std::string nu = "volterra";
    read(ou, "nu", "ou.", nu);
    if (nu == "volterra")
        cfg.nu = NuMethod::volterra;
    else if (nu == "abel")
        cfg.nu = NuMethod::abel;
    else
        config_fail("ou.nu", "expected 'volterra' or 'abel'");

    read(section(root, "gbm"), "ito_correction", "gbm.", cfg.ito_correction);

    const json& v = section(root, "validation");
    read(v, "bins", "validation.", cfg.bins);
    read(v, "alpha", "validation.", cfg.alpha);
    read(v, "min_attain_rate", "validation.", cfg.min_attain_rate);

    const json& o = section(root, "output");
    read(o, "paths", "output.", cfg.paths_file);
    read(o, "report", "output.", cfg.report_file);

    check_run_config(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) fail(Errc::config_error, "config: cannot open '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

void check_run_config(const RunConfig& cfg) {
    const GeneratorInfo& info = generator_info(cfg.generator);
    const auto& c = cfg.constraint;
    if (info.end == EndShape::required && !c.b) config_fail("b", "generator " + cfg.generator + " needs constraint.b");
    if (info.end == EndShape::forbidden && c.b)
        config_fail("b", "generator " + cfg.generator + " is open-ended; remove constraint.b");
    if (!(c.T > c.t0)) config_fail("T", "constraint.T must exceed constraint.t0");
    if (!(cfg.sigma > 0.0)) config_fail("sigma", "params.sigma must be positive");
    if (!(cfg.kappa > 0.0)) config_fail("kappa", "params.kappa must be positive");
    if (cfg.n_paths == 0) config_fail("n_paths", "must be positive");
    if (cfg.bins < 2) config_fail("validation.bins", "need at least two bins");
    if (cfg.numerics.n_timesteps < 4) config_fail("numerics.n_timesteps", "must be at least 4");
    if (cfg.numerics.L < 16) config_fail("numerics.L", "must be at least 16");
    if (!(cfg.numerics.delta > 0.0 && cfg.numerics.delta < 0.5)) config_fail("numerics.delta", "must lie in (0, 0.5)");
    if (!(cfg.numerics.epsilon > 0.0)) config_fail("numerics.epsilon", "must be positive");
    if (cfg.generator.rfind("gbm", 0) == 0) {
        if (c.kind != ExtremumKind::max) config_fail("constraint.kind", "GBM generators condition on the maximum");
        if (!(c.a > 0.0) || !(c.M > 0.0) || (c.b && !(*c.b > 0.0)))
            config_fail("a", "GBM levels a, b, M must be positive");
    }
    if (info.constrained) {
        try {
            c.validate();
        } catch (const Error& e) {
            config_fail("M", e.what());
        }
    }
}

// ---------------------------------------------------------------- generation

namespace {

Path negate(Path p) {
    for (auto& v : p.values) v = -v;
    return p;
}

/// Everything shared by the paths of one batch; built before the workers start.
struct BatchContext {
    const RunConfig& cfg;
    TimeGrid grid;
    bool is_min;
    ConstraintSpec spec_max;  // the constraint in max form
    std::shared_ptr<const Dynamics> base;
    std::shared_ptr<const Dynamics> dyn;  // prepared, max form
    std::optional<MeanderBridgeSampler> sampler;

    explicit BatchContext(const RunConfig& c)
        : cfg(c),
          grid(c.constraint.t0, c.constraint.T, c.numerics.n_timesteps),
          is_min(c.constraint.kind == ExtremumKind::min),
          spec_max(is_min ? c.constraint.negated() : c.constraint) {
        const std::string& g = cfg.generator;
        const double sg = cfg.sigma;
        if (g == "method1" || g == "drift-bridge-max")
            sampler.emplace(BridgeEndpoints{spec_max.t0, spec_max.T, spec_max.a, *spec_max.b, sg}, spec_max.M);
        std::shared_ptr<const Dynamics> d;
        if (g == "method2") d = std::make_shared<BrownianDynamics>(sg);
        if (g == "ou-bridge-max" || g == "ou-open-max") {
            const OUParams p{cfg.kappa, cfg.mu, sg};
            p.validate();
            if (cfg.kappa * grid.dt() >= 1.0) config_fail("kappa", "kappa * dt must be below 1");
            d = std::make_shared<OUDynamics>(p, OUOptions{cfg.nu});
        }
        if (d) {
            base = is_min ? d->mirrored() : d;
            NumericsConfig nc = cfg.numerics;
            dyn = base->prepared(spec_max, nc);
        }
    }

    Path engine(RandomSource& rng) const {
        ConstraintSpec s = spec_max;
        Path p = gen_constrained_bayesian(s, *dyn, cfg.numerics, rng);
        if (cfg.rectify) p = rectify(p, s.a, s.b, s.M);
        return p;
    }

    Path one(std::size_t i) const {
        RandomSource rng = RandomSource::for_path(cfg.seed, i);
        const std::string& g = cfg.generator;
        const auto& c = cfg.constraint;
        const double sg = cfg.sigma;
        const auto flip = [&](Path p) { return is_min ? negate(std::move(p)) : p; };

        if (g == "method1" || g == "drift-bridge-max") return flip(sampler->generate(grid, rng));
        if (g == "method2" || g == "ou-bridge-max" || g == "ou-open-max") return flip(engine(rng));
        if (g == "reflection") {
            Path p = gen_wiener_open_max(spec_max.a, spec_max.M, sg, grid, rng);
            if (cfg.rectify) p = rectify(p, spec_max.a, std::nullopt, spec_max.M);
            return flip(std::move(p));
        }
        if (g == "drift-open-max") {
            const DriftParams dp{is_min ? -cfg.c : cfg.c, sg};
            NumericsConfig nc = cfg.numerics;
            Path p = gen_drift_open_with_max(spec_max.a, spec_max.M, dp, c.T - c.t0, nc, rng);
            if (cfg.rectify) p = rectify(p, spec_max.a, std::nullopt, spec_max.M);
            Path out(grid, std::move(p.values));
            return flip(std::move(out));
        }
        if (g == "gbm-bridge-max" || g == "gbm-open-max") {
            GBMParams gp{cfg.c, sg, c.a, c.b, c.M, cfg.ito_correction, cfg.rectify};
            Path p = gen_gbm_with_max(gp, c.T - c.t0, cfg.numerics, rng);
            return Path(grid, std::move(p.values));
        }
        if (g == "wiener") return gen_wiener(c.a, sg, grid, rng);
        if (g == "brownian-bridge") return gen_brownian_bridge(BridgeEndpoints{c.t0, c.T, c.a, *c.b, sg}, grid, rng);
        if (g == "ou") return gen_ou(OUParams{cfg.kappa, cfg.mu, sg}, c.a, grid, rng);
        if (g == "ou-bridge")
            return gen_ou_bridge(OUParams{cfg.kappa, cfg.mu, sg}, BridgeEndpoints{c.t0, c.T, c.a, *c.b, sg}, grid, rng);
        fail(Errc::config_error, "generator: unknown id '" + g + "'");
    }
};

}  // namespace

std::vector<Path> generate_batch(const RunConfig& cfg, unsigned threads) {
    check_run_config(cfg);
    const BatchContext ctx(cfg);
    const std::size_t n = cfg.n_paths;
    std::vector<std::optional<Path>> slots(n);
    const unsigned nt = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::exception_ptr> errors(nt);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t i = w; i < n; i += nt) slots[i].emplace(ctx.one(i));
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (nt == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nt; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Path> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------- validation

namespace {

/// Closed-form density of the extremum time for generators that have one.
std::optional<std::function<double(double)>> argmax_reference(const RunConfig& cfg) {
    const std::string& g = cfg.generator;
    const auto& c = cfg.constraint;
    const bool is_min = c.kind == ExtremumKind::min;
    const ConstraintSpec s = is_min ? c.negated() : c;
    const double sg = cfg.sigma;
    const double t0 = c.t0, span = c.T - c.t0;
    if ((g == "method1" || g == "drift-bridge-max" || g == "method2") && s.b) {
        const BridgeEndpoints ep{s.t0, s.T, s.a, *s.b, sg};
        const double M = s.M;
        return [ep, M](double t) { return bb_argmax_density_given_max(t, M, ep); };
    }
    if (g == "gbm-bridge-max") {
        const BridgeEndpoints ep{c.t0, c.T, std::log(c.a), std::log(*c.b), sg};
        const double M = std::log(c.M);
        return [ep, M](double t) { return bb_argmax_density_given_max(t, M, ep); };
    }
    if (g == "method2" || g == "reflection" || g == "drift-open-max") {
        const double drift = g == "drift-open-max" ? (is_min ? -cfg.c : cfg.c) : 0.0;
        const DriftParams dp{drift, sg};
        const double m = s.M - s.a;
        return [=](double t) { return drift_argmax_density_given_max(t - t0, m, span, dp); };
    }
    if (g == "gbm-open-max") {
        const double drift = cfg.ito_correction ? cfg.c - 0.5 * sg * sg : cfg.c;
        const DriftParams dp{drift, sg};
        const double m = std::log(c.M) - std::log(c.a);
        return [=](double t) { return drift_argmax_density_given_max(t - t0, m, span, dp); };
    }
    return std::nullopt;
}

constexpr std::size_t kMinPathsForChiSquare = 50;

}  // namespace

ValidationReport validate_batch(const RunConfig& cfg, std::span<const Path> paths) {
    const GeneratorInfo& info = generator_info(cfg.generator);
    const std::string& g = cfg.generator;
    InvariantSpec is;
    is.constraint = cfg.constraint;
    is.constrained = info.constrained;
    is.seed = cfg.seed;
    is.epsilon = cfg.numerics.epsilon;
    is.min_attain_rate = cfg.min_attain_rate;
    const bool exact_by_construction = g == "method1" || g == "drift-bridge-max" || g == "gbm-bridge-max";
    is.exact_attainment = exact_by_construction || cfg.rectify;
    is.positive = g.rfind("gbm", 0) == 0;
    const double dt = (cfg.constraint.T - cfg.constraint.t0) / static_cast<double>(cfg.numerics.n_timesteps);
    if (g == "reflection" && !cfg.rectify) {
        is.bound_tolerance = 4.0 * cfg.sigma * std::sqrt(dt);
        is.epsilon = std::max(is.epsilon, is.bound_tolerance);
    }
    if (is.positive) is.epsilon = cfg.constraint.M * -std::expm1(-cfg.numerics.epsilon);
    ValidationReport r = invariant_suite(paths, is);

    if (paths.size() >= kMinPathsForChiSquare) {
        if (auto ref = argmax_reference(cfg)) {
            std::vector<Path> flipped;
            std::span<const Path> use = paths;
            if (cfg.constraint.kind == ExtremumKind::min) {
                flipped.assign(paths.begin(), paths.end());
                for (auto& p : flipped)
                    for (auto& v : p.values) v = -v;
                use = flipped;
            }
            const Histogram h = histogram_argmax(use, cfg.bins);
            TestRecord rec{"argmax-chi-square", 0.0, cfg.alpha, false, paths.size(), cfg.seed};
            try {
                const TestStatistic t = chi_square_vs_density(h, *ref);
                rec.statistic = t.p_value;
                rec.passed = t.p_value > cfg.alpha;
            } catch (const Error& e) {
                if (e.code() != Errc::insufficient_samples) throw;
            }
            r.add(rec);
        }
    }
    return r;
}

// ---------------------------------------------------------------- output

void write_paths_csv(std::ostream& os, std::span<const Path> paths) {
    os << "path_id,t,value\n";
    char buf[96];
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const Path& p = paths[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, p.grid[j], p.values[j]);
            os << buf;
        }
    }
}

std::string report_to_json(const ValidationReport& r) {
    json out = json::object();
    out["passed"] = r.all_passed();
    json recs = json::array();
    for (const auto& t : r.records) {
        recs.push_back({{"id", t.id},
                        {"statistic", t.statistic},
                        {"threshold", t.threshold},
                        {"passed", t.passed},
                        {"sample_size", t.sample_size},
                        {"seed", t.seed}});
    }
    out["records"] = std::move(recs);
    return out.dump(2);
}

unsigned resolve_threads(std::optional<unsigned> flag) {
    if (flag && *flag > 0) return *flag;
    if (const char* env = std::getenv("BRIDGEX_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

}  // namespace bridgex
