#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace pnls::cli;

    CLI::App app{"Point-interaction NLS charge solver"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string out_dir;
    int refine = -1;
    app.add_option("--out-dir", out_dir, "Output directory (default: config, then $PNLS_OUT_DIR, then .)");
    app.add_option("--jobs", common.jobs, "Concurrent scan cells")->check(CLI::PositiveNumber);
    app.add_option("--refine", refine, "Extra runs at refinement levels 1..N")->check(CLI::NonNegativeNumber);

    KernelTableOptions table;
    auto* kt = app.add_subcommand("kernel-table", "Tabulate one special function as t,value_re,value_im");
    kt->add_option("--function", table.function)->check(CLI::IsMember({"I", "N", "K0", "sici", "Q"}));
    kt->add_option("--tmin", table.t_min);
    kt->add_option("--tmax", table.t_max);
    kt->add_option("--points", table.points);
    kt->add_flag("--log-spacing", table.log_spacing);
    kt->add_option("--lambda", table.lambda, "Spectral parameter for Q");

    std::string config;
    auto* solve = app.add_subcommand("solve", "Solve one configured run");
    solve->add_option("--config", config, "TOML or JSON run config")->required()->check(CLI::ExistingFile);

    std::vector<double> betas, sigmas;
    auto* scan = app.add_subcommand("scan", "Solve a grid of (beta0, sigma) cells");
    scan->add_option("--config", config, "Base run config")->required()->check(CLI::ExistingFile);
    scan->add_option("--beta0-list", betas)->delimiter(',');
    scan->add_option("--sigma-list", sigmas)->delimiter(',');

    std::string suite;
    auto* verify = app.add_subcommand("verify", "Compare against the brute-force references");
    verify->add_option("--suite", suite)->required()->check(CLI::IsMember({"kernels", "operators", "charge", "conservation"}));

    // global flags are accepted after the subcommand name too
    for (auto* sub : {kt, solve, scan, verify}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }
    common.out_dir = out_dir;
    if (refine >= 0) common.refine = refine;

    try {
        if (*kt) return cmd_kernel_table(table, common);
        if (*solve) return cmd_solve(config, common);
        if (*scan) return cmd_scan(config, betas, sigmas, common);
        return cmd_verify(suite, common);
    } catch (...) {
        std::string cls, msg;
        const ExitCode code = classify_current_exception(cls, msg);
        std::cerr << "error (" << cls << "): " << msg << '\n';
        return code;
    }
}
