#pragma once

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pnls::cli {

// Process exit codes, one per error class.
enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1, // verify suite reported a failing check
    exit_usage = 2,        // bad command line or config
    exit_convergence = 3,
    exit_tail_bound = 4,
    exit_resolution = 5,
    exit_domain = 6,
    exit_io = 7,
    exit_internal = 8,
};

struct CommonOptions {
    std::filesystem::path out_dir; // empty: config outputs.directory, then $PNLS_OUT_DIR, then "."
    int jobs = 1;
    std::optional<int> refine;
};

// Default output directory when neither --out-dir nor the config names one.
std::filesystem::path default_out_dir();

// Classifies the active exception into an exit code and a short class name.
ExitCode classify_current_exception(std::string& class_name, std::string& message);

struct KernelTableOptions {
    std::string function = "I"; // I, N, K0, sici (si in value_re, ci in value_im) or Q
    double t_min = 1e-6;
    double t_max = 10.0;
    int points = 121;
    bool log_spacing = false;
    double lambda = 1.0; // Q only
};

int cmd_kernel_table(const KernelTableOptions& opts, const CommonOptions& common);
int cmd_solve(const std::filesystem::path& config_path, const CommonOptions& common);
int cmd_scan(const std::filesystem::path& config_path, const std::vector<double>& beta0_list,
             const std::vector<double>& sigma_list, const CommonOptions& common);
int cmd_verify(const std::string& suite, const CommonOptions& common);

// Runs one configured solve (all refinement levels), writes its files under `dir` with file
// stem config.outputs.name, and returns the summary. Throws on solver errors.
nlohmann::json run_solve(const RunConfig& config, const std::filesystem::path& dir, int levels);

} // namespace pnls::cli
