// bridgex: batch generation, validation, timing and table dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bridgex/drift_gbm.hpp"
#include "bridgex/ou_extrema.hpp"
#include "bridgex/run_config.hpp"
#include "bridgex/validation.hpp"

namespace fs = std::filesystem;
using namespace bridgex;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<std::size_t> paths;
    bool no_rectify = false;
    std::optional<unsigned> threads;
    std::optional<std::string> method;
    bool abel = false;
    bool volterra = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "JSON run configuration")->required();
    cmd->add_option("--seed", f.seed, "override the seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--paths", f.paths, "override the number of paths");
    cmd->add_flag("--no-rectify", f.no_rectify, "leave engine output unrectified");
    cmd->add_option("--threads", f.threads, "worker threads (default: BRIDGEX_THREADS or 1)");
    cmd->add_option("--method", f.method, "override the generator id");
    auto* abel = cmd->add_flag("--abel", f.abel, "OU: small-time closed form for nu");
    auto* volt = cmd->add_flag("--volterra", f.volterra, "OU: block-by-block solution for nu");
    abel->excludes(volt);
}

RunConfig resolve(const RunFlags& f) {
    RunConfig cfg = load_run_config(f.config);
    if (f.method) cfg.generator = *f.method;
    if (f.seed) cfg.seed = *f.seed;
    if (f.paths) cfg.n_paths = *f.paths;
    if (f.no_rectify) cfg.rectify = false;
    if (f.abel) cfg.nu = NuMethod::abel;
    if (f.volterra) cfg.nu = NuMethod::volterra;
    check_run_config(cfg);
    return cfg;
}

fs::path output_file(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return fs::path(dir) / name;
}

int cmd_generate(const RunFlags& f) {
    const RunConfig cfg = resolve(f);
    const auto paths = generate_batch(cfg, resolve_threads(f.threads));
    const fs::path file = output_file(f.out, cfg.paths_file);
    std::ofstream os(file, std::ios::binary);
    write_paths_csv(os, paths);
    std::cerr << "wrote " << paths.size() << " paths to " << file.string() << '\n';
    return 0;
}

int cmd_validate(const RunFlags& f) {
    const RunConfig cfg = resolve(f);
    const auto paths = generate_batch(cfg, resolve_threads(f.threads));
    const ValidationReport rep = validate_batch(cfg, paths);
    const std::string js = report_to_json(rep);
    std::ofstream(output_file(f.out, cfg.report_file), std::ios::binary) << js << '\n';
    std::cout << js << '\n';
    return rep.all_passed() ? 0 : kExitValidation;
}

struct BenchFlags {
    std::optional<std::string> config;
    std::size_t paths_m1 = 2000;
    std::size_t paths_m2 = 20;
    std::size_t L = 10000;
    std::size_t L_low = 1000;
    std::string out = ".";
};

int cmd_bench(const BenchFlags& f) {
    BenchmarkSpec s;
    if (f.config) {
        const RunConfig cfg = load_run_config(*f.config);
        if (!cfg.constraint.b) fail(Errc::config_error, "b: the benchmark compares bridge generators");
        s.ep = BridgeEndpoints{cfg.constraint.t0, cfg.constraint.T, cfg.constraint.a, *cfg.constraint.b, cfg.sigma};
        s.M = cfg.constraint.M;
        s.n_steps = cfg.numerics.n_timesteps;
        s.delta = cfg.numerics.delta;
        s.epsilon = cfg.numerics.epsilon;
        s.seed = cfg.seed;
    }
    s.paths_method1 = f.paths_m1;
    s.paths_method2 = f.paths_m2;
    s.L_high = f.L;
    s.L_low = f.L_low;
    const TimingReport t = benchmark(s);
    const ValidationReport rep = timing_checks(t, s);
    std::printf("method1 per path   %.6g s\n", t.method1_per_path);
    std::printf("method2 per path   %.6g s (L=%zu)\n", t.method2_per_path, s.L_high);
    std::printf("method2 per path   %.6g s (L=%zu)\n", t.method2_low_L_per_path, s.L_low);
    std::printf("ratio method2/1    %.6g\n", t.ratio());
    std::printf("ratio L high/low   %.6g\n", t.L_ratio());
    std::printf("doubling N: method1 x%.3g, method2 x%.3g\n", t.method1_double_n_ratio, t.method2_double_n_ratio);
    std::ofstream(output_file(f.out, "timing.json"), std::ios::binary) << report_to_json(rep) << '\n';
    return rep.all_passed() ? 0 : kExitValidation;
}

struct TableFlags {
    double level = 1.0;
    double theta_max = 0.9;
    std::size_t blocks = 1000;
    bool abel = false;
    std::optional<std::string> out;
};

int cmd_tables(const TableFlags& f) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (f.out) {
        file.open(*f.out, std::ios::binary);
        os = &file;
    }
    if (f.abel) {
        *os << "theta,F\n";
        os->precision(17);
        const std::size_t n = 2 * f.blocks;
        for (std::size_t i = 0; i <= n; ++i) {
            const double th = f.theta_max * static_cast<double>(i) / static_cast<double>(n);
            *os << th << ',' << nu_abel_approx(th, f.level) << '\n';
        }
    } else {
        solve_volterra_nu(f.level, f.theta_max, f.blocks).write_csv(*os);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extremum-conditioned path generation and validation"};
    app.require_subcommand(1);

    RunFlags gen_flags, val_flags;
    auto* gen = app.add_subcommand("generate", "emit paths as CSV (path_id,t,value)");
    add_run_flags(gen, gen_flags);
    auto* val = app.add_subcommand("validate", "generate, run the validation suite, emit a JSON report");
    add_run_flags(val, val_flags);

    BenchFlags bf;
    auto* bench = app.add_subcommand("bench", "time the meander and incremental bridge generators");
    bench->add_option("--config", bf.config, "bridge configuration (endpoints, M, numerics)");
    bench->add_option("--paths-method1", bf.paths_m1, "paths timed for the meander construction");
    bench->add_option("--paths-method2", bf.paths_m2, "paths timed for the incremental generator");
    bench->add_option("--L", bf.L, "increment grid size");
    bench->add_option("--L-low", bf.L_low, "reduced grid size for the scaling check");
    bench->add_option("--out", bf.out, "output directory for timing.json");

    TableFlags tf;
    auto* tables = app.add_subcommand("tables", "dump the first-passage Volterra solution nu (theta,F)");
    tables->add_option("--level", tf.level, "b in the Volterra equation");
    tables->add_option("--theta-max", tf.theta_max, "upper end of the theta grid, below 1");
    tables->add_option("--blocks", tf.blocks, "number of blocks (2 nodes each)");
    tables->add_flag("--abel", tf.abel, "dump the small-time closed form instead");
    tables->add_option("--out", tf.out, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) return cmd_generate(gen_flags);
        if (*val) return cmd_validate(val_flags);
        if (*bench) return cmd_bench(bf);
        if (*tables) return cmd_tables(tf);
    } catch (const Error& e) {
        std::cerr << "bridgex: " << e.what() << '\n';
        return e.code() == Errc::config_error ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "bridgex: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
