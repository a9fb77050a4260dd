// Command-line front end: one experiment per invocation, machine-readable
// CSV/JSON artifacts, deterministic for a fixed (config, seed).

#include "fbsde/benchmarks.hpp"
#include "fbsde/constants.hpp"
#include "fbsde/newton.hpp"
#include "fbsde/record_io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

namespace {

using namespace fbsde;

std::string trimmed(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void config_error(const std::string& path, int lineno, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
}

long long parse_int(const std::string& path, int lineno, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        config_error(path, lineno, key + ": expected an integer, got '" + value + "'");
    }
}

double parse_num(const std::string& path, int lineno, const std::string& key,
                 const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        config_error(path, lineno, key + ": expected a number, got '" + value + "'");
    }
}

/// Flat `key = value` config; `#` starts a comment. Keys: benchmark, N, M,
/// iters, seed, eps, degree, ridge, workers. Anything else is an error.
struct ParsedConfig {
    RunSettings settings;
    bool has_steps = false; // N given explicitly (else benchmark default)
    bool has_paths = false; // M given explicitly
};

ParsedConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    ParsedConfig pc;
    bool has_benchmark = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) config_error(path, lineno, "expected 'key = value'");
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (value.empty()) config_error(path, lineno, key + ": missing value");
        RunSettings& s = pc.settings;
        if (key == "benchmark") {
            s.benchmark = value;
            has_benchmark = true;
        } else if (key == "N") {
            s.N = static_cast<int>(parse_int(path, lineno, key, value));
            pc.has_steps = true;
        } else if (key == "M") {
            s.M = static_cast<int>(parse_int(path, lineno, key, value));
            pc.has_paths = true;
        } else if (key == "iters") {
            s.iters = static_cast<int>(parse_int(path, lineno, key, value));
        } else if (key == "seed") {
            s.seed = static_cast<std::uint64_t>(parse_int(path, lineno, key, value));
        } else if (key == "eps") {
            s.eps = parse_num(path, lineno, key, value);
        } else if (key == "degree") {
            s.degree = static_cast<int>(parse_int(path, lineno, key, value));
        } else if (key == "ridge") {
            s.ridge = parse_num(path, lineno, key, value);
        } else if (key == "workers") {
            s.workers = static_cast<int>(parse_int(path, lineno, key, value));
        } else {
            config_error(path, lineno, "unknown key '" + key + "'");
        }
    }
    if (!has_benchmark) throw std::runtime_error(path + ": config must set 'benchmark'");
    if (!(pc.settings.eps > 0.0 && pc.settings.eps < 1.0))
        throw std::runtime_error(path + ": eps must lie in (0,1)");
    if (pc.settings.iters < 1) throw std::runtime_error(path + ": iters must be >= 1");
    if (pc.settings.workers < 1) throw std::runtime_error(path + ": workers must be >= 1");
    return pc;
}

struct Experiment {
    RunSettings settings;
    const BenchmarkCase* bc = nullptr;
    TimeGrid grid;
    RegressionConfig regression;
    IterationConfig iteration;
    OracleBundle oracle;
};

Experiment prepare(const std::string& config_path) {
    Experiment ex;
    ParsedConfig pc = parse_config(config_path);
    ex.bc = &find_case(pc.settings.benchmark);
    if (!pc.has_steps) pc.settings.N = ex.bc->default_steps;
    if (!pc.has_paths) pc.settings.M = ex.bc->default_paths;
    ex.settings = pc.settings;
    ex.grid = TimeGrid(ex.bc->horizon, ex.settings.N);

    ex.regression.degree = ex.settings.degree;
    ex.regression.ridge = ex.settings.ridge;

    ex.oracle = build_oracle(*ex.bc, ex.grid, ex.settings.M, ex.settings.seed, ex.regression,
                             ex.settings.workers);

    ex.iteration.iters = ex.settings.iters;
    ex.iteration.eps = ex.settings.eps;
    ex.iteration.floor = ex.oracle.floor;
    ex.iteration.regression = ex.regression;
    ex.iteration.workers = ex.settings.workers;
    return ex;
}

std::filesystem::path output_file(const std::string& out_dir, const char* name) {
    std::filesystem::path dir(out_dir);
    if (!dir.empty()) std::filesystem::create_directories(dir);
    return dir / name;
}

void print_run_summary(const char* method, const ConvergenceRecord& rec) {
    std::printf("%s: %zu iterates, floor %s\n", method, rec.iterations.size() - 1,
                format_g17(rec.floor).c_str());
    for (const IterationStats& st : rec.iterations) {
        std::printf("  iter %d  combined %s  ratio %s\n", st.iter,
                    format_g17(st.combined).c_str(), format_g17(st.ratio).c_str());
    }
    if (!rec.ratio_violations.empty()) {
        std::printf("%s: ratio bound %s exceeded at iteration(s):", method,
                    format_g17(rec.eps + rec.slack).c_str());
        for (int n : rec.ratio_violations) std::printf(" %d", n);
        std::printf("\n");
    }
}

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
    Experiment ex = prepare(config_path);
    const ConvergenceRecord rec = run_newton(ex.bc->problem, ex.grid, ex.oracle.noise,
                                             ex.iteration, &ex.oracle.solution);
    const ConstantsReport constants =
        evaluate_constants(ex.bc->problem, ex.bc->horizon, ex.settings.eps);
    write_record_csv(output_file(out_dir, "record.csv").string(), rec);
    write_record_json(output_file(out_dir, "record.json").string(), ex.settings, rec, constants,
                      ex.oracle.stats, ex.oracle.probe);
    print_run_summary("newton", rec);
    return rec.ratios_ok() ? 0 : 2;
}

int cmd_compare(const std::string& config_path, const std::string& out_dir) {
    Experiment ex = prepare(config_path);
    const ConvergenceRecord newton_rec = run_newton(ex.bc->problem, ex.grid, ex.oracle.noise,
                                                    ex.iteration, &ex.oracle.solution);
    const ConvergenceRecord picard_rec = run_picard(ex.bc->problem, ex.grid, ex.oracle.noise,
                                                    ex.iteration, &ex.oracle.solution);
    write_compare_csv(output_file(out_dir, "compare.csv").string(), newton_rec, picard_rec);
    print_run_summary("newton", newton_rec);
    print_run_summary("picard", picard_rec);
    return newton_rec.ratios_ok() ? 0 : 2;
}

int cmd_constants(const DerivativeBounds& bounds, double horizon, double eps) {
    const ConstantsReport r = evaluate_constants(bounds, horizon, eps);
    std::printf("c_bsigma=%s\n", format_g17(r.c_bsigma).c_str());
    std::printf("C0=%s\n", format_g17(r.C0).c_str());
    std::printf("alpha=%s\n", format_g17(r.alpha).c_str());
    if (r.C1 > 1e300)
        std::printf("log_C1=%s\n", format_g17(r.log_C1).c_str());
    else
        std::printf("C1=%s\n", format_g17(r.C1).c_str());
    if (r.C3 > 1e300)
        std::printf("log_C3=%s\n", format_g17(r.log_C3).c_str());
    else
        std::printf("C3=%s\n", format_g17(r.C3).c_str());
    return 0;
}

int cmd_list_benchmarks() {
    for (const BenchmarkCase& bc : catalog()) {
        std::printf("%-8s %s (defaults: N=%d, M=%d, %s oracle)\n", bc.id.c_str(),
                    bc.summary.c_str(), bc.default_steps, bc.default_paths,
                    bc.kind == BenchmarkCase::OracleKind::analytic ? "analytic" : "fine-grid");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo Newton solver for decoupled forward-backward SDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";

    CLI::App* solve = app.add_subcommand(
        "solve", "Run the Newton iteration on a configured benchmark; write record.csv/.json");
    solve->add_option("config", config_path, "flat key = value config file")->required();
    solve->add_option("--out", out_dir, "output directory (default: current)");

    CLI::App* compare = app.add_subcommand(
        "compare", "Run Newton and Picard on shared noise; write compare.csv");
    compare->add_option("config", config_path, "flat key = value config file")->required();
    compare->add_option("--out", out_dir, "output directory (default: current)");

    fbsde::DerivativeBounds bounds;
    double horizon = 1.0;
    double eps = 0.5;
    CLI::App* constants =
        app.add_subcommand("constants", "Evaluate the convergence-estimate constants");
    constants->add_option("--drift", bounds.drift, "sup-norm bound of the drift derivative");
    constants->add_option("--diffusion", bounds.diffusion,
                          "sup-norm bound of the diffusion derivative");
    constants->add_option("--driver", bounds.driver, "sup-norm bound of the driver derivative");
    constants->add_option("--terminal", bounds.terminal,
                          "sup-norm bound of the terminal-map derivative");
    constants->add_option("-T,--horizon", horizon, "time horizon");
    constants->add_option("--eps", eps, "weight split in (0,1)");

    CLI::App* list = app.add_subcommand("list-benchmarks", "List the built-in benchmark cases");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*solve) return cmd_solve(config_path, out_dir);
        if (*compare) return cmd_compare(config_path, out_dir);
        if (*constants) return cmd_constants(bounds, horizon, eps);
        if (*list) return cmd_list_benchmarks();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
