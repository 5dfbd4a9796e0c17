#pragma once

#include "pnls/charge.hpp"
#include "pnls/field.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnls::cli {

enum class ProfileKind { zero, gaussian, compatible, sampled };

struct DatumSection {
    double lambda = 1.0;
    cplx q0{1.0, 0.0};
    ProfileKind profile = ProfileKind::compatible;
    cplx amplitude{1.0, 0.0}; // gaussian only
    double width = 1.0;        // gaussian and compatible
    std::filesystem::path profile_csv;
    double decay_exponent = 4.0;
    double epsilon = 0.5;
};

struct GridSection {
    double t_max = 2.0;
    double rho_max = 2000.0;
    double panel_width = 0.0; // 0 selects min(1, 6 / t_max)
    int points = 8;
    bool adaptive = true;
};

struct OutputSection {
    std::filesystem::path directory;
    std::string name = "run";
    bool csv = true;
    bool json = true;
    std::vector<double> spectral_times; // dump SpectralField CSVs at these times
};

struct RunConfig {
    DatumSection datum;
    ModelParams params;
    SolverConfig solver;
    GridSection grid;
    OutputSection outputs;

    InitialDatum make_datum() const;
    MomentumGrid make_momentum_grid(int refinement_level = 0) const;
    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Diagnostics carry "field: message" or "line N, field: message".
class ConfigParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// TOML (by extension .toml) or JSON with the same layout; unknown keys are rejected. Relative paths resolve
// against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_toml(const std::string& text, const std::filesystem::path& base = {});
RunConfig parse_json(const std::string& text, const std::filesystem::path& base = {});

nlohmann::json to_json(const RunConfig& config);

} // namespace pnls::cli
