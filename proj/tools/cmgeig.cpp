// Command-line front end: `solve` runs the cascadic eigensolver and reports
// per-level results, `study` adds the convergence-rate table, `verify` adds
// the direct baseline, the auxiliary lockstep run and the theorem checks.

#include "cmg/errors.hpp"
#include "cmg/harness.hpp"
#include "cmg/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace {

struct CliOptions {
    std::string problem = "laplace";
    std::string mesh;
    int coarse_cells = 8;
    int levels = 4;
    int nev = 1;
    std::string smoother = "cg";
    double sigma = 2.0;
    double zeta = 1.01;
    int mbar = 2;
    int coarse_space_level = 1;
    bool baseline = false;
    bool verify = false;
    std::uint64_t seed = 42;
    std::string out;
    std::string plot;
};

void add_common_options(CLI::App& cmd, CliOptions& opt) {
    cmd.add_option("--problem", opt.problem, "Coefficient set: laplace|example2")
        ->check(CLI::IsMember({"laplace", "example2"}));
    cmd.add_option("--mesh", opt.mesh, "Coarse mesh file (default: structured unit square)");
    cmd.add_option("--coarse-cells", opt.coarse_cells, "Structured coarse cells per side")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--levels", opt.levels, "Number of mesh levels")->check(CLI::PositiveNumber);
    cmd.add_option("--nev", opt.nev, "Number of eigenpairs")->check(CLI::PositiveNumber);
    cmd.add_option("--smoother", opt.smoother, "cg|gs|jacobi|richardson")
        ->check(CLI::IsMember({"cg", "gs", "jacobi", "richardson"}));
    cmd.add_option("--sigma", opt.sigma, "Schedule safety factor (> 1)");
    cmd.add_option("--zeta", opt.zeta, "Schedule exponent (> 1)");
    cmd.add_option("--mbar", opt.mbar, "Finest-level smoothing steps");
    cmd.add_option("--coarse-space-level", opt.coarse_space_level,
                   "1-based level providing the correction space");
    cmd.add_flag("--baseline", opt.baseline, "Run the direct eigensolver on every level");
    cmd.add_flag("--verify", opt.verify, "Run the auxiliary lockstep and theorem checks");
    cmd.add_option("--seed", opt.seed, "Seed of the baseline start block");
    cmd.add_option("--out", opt.out, "CSV output path");
    cmd.add_option("--plot", opt.plot, "Plot-data output path (whitespace table)");
}

cmg::ExperimentSpec to_spec(const CliOptions& opt) {
    cmg::ExperimentSpec spec;
    spec.problem = cmg::problem_from_name(opt.problem);
    spec.mesh_path = opt.mesh;
    spec.coarse_cells = opt.coarse_cells;
    spec.config.levels = opt.levels;
    spec.config.nev = opt.nev;
    spec.config.smoother.kind = cmg::smoother_from_name(opt.smoother);
    spec.config.sigma = opt.sigma;
    spec.config.zeta = opt.zeta;
    spec.config.m_bar = opt.mbar;
    spec.config.coarse_space_level = opt.coarse_space_level;
    spec.config.seed = opt.seed;
    spec.baseline = opt.baseline;
    spec.verify = opt.verify;
    spec.out_csv = opt.out;
    return spec;
}

int run(const CliOptions& opt, bool with_rates, bool force_verify) {
    cmg::ExperimentSpec spec = to_spec(opt);
    if (force_verify) {
        spec.baseline = true;
        spec.verify = true;
    }
    const cmg::StudyResult result = cmg::run_study(spec);
    cmg::print_level_table(std::cout, result);
    if (!spec.out_csv.empty()) std::cout << "wrote " << spec.out_csv << "\n";
    if (!opt.plot.empty()) {
        cmg::emit_plotdata(result.records, opt.plot);
        std::cout << "wrote " << opt.plot << "\n";
    }
    if (with_rates) cmg::print_rate_table(std::cout, cmg::convergence_rates(result.records));
    if (result.verification) {
        cmg::print_verification(std::cout, *result.verification);
        if (force_verify && !result.verification->all_ok()) {
            std::cerr << "verification checks failed\n";
            return 1;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascadic multigrid solver for 2D elliptic eigenproblems (P1 elements)"};
    app.set_version_flag("--version", cmg::version_string);
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* solve = app.add_subcommand("solve", "Run the cascadic solver");
    CLI::App* study = app.add_subcommand("study", "solve plus a convergence-rate table");
    CLI::App* verify =
        app.add_subcommand("verify", "solve --baseline --verify plus theorem pass/fail report");
    for (CLI::App* cmd : {solve, study, verify}) add_common_options(*cmd, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) return run(opt, false, false);
        if (study->parsed()) return run(opt, true, false);
        return run(opt, false, true);
    } catch (const cmg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
