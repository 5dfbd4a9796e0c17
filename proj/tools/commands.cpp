#include "commands.hpp"

#include "pnls/charge.hpp"
#include "pnls/errors.hpp"
#include "pnls/oracle.hpp"
#include "pnls/specfun.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace pnls::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int csv_digits = 16; // scientific: 17 significant digits
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    out << std::setprecision(csv_digits) << std::scientific;
    return out;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

fs::path resolve_out_dir(const CommonOptions& common, const fs::path& from_config) {
    fs::path dir = !common.out_dir.empty() ? common.out_dir
                   : !from_config.empty()  ? from_config
                                           : default_out_dir();
    fs::create_directories(dir);
    return dir;
}

std::string number_tag(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

struct LevelResult {
    ChargeTrajectory traj;
    std::vector<ObservableRecord> obs;
    double mass_drift = 0.0;
    double energy_drift = 0.0;
    double max_residual = 0.0;
    double observables_end = 0.0; // last node with mass, energy and residual
};

LevelResult solve_level(const RunConfig& config, const InitialDatum& datum, int level) {
    const SolverConfig solver = config.solver.refined(level);
    LevelResult r;
    r.traj = config.grid.adaptive
                 ? continue_until(datum, config.params, solver, config.grid.t_max)
                 : solve_charge(datum, config.params, solver, solver_grid(solver, config.grid.t_max));
    if (r.traj.status == RunStatus::blow_up) {
        // observables can outrun the momentum grid well before T*; the charge prefix is still reported
        SpectralPropagator prop(datum, config.make_momentum_grid(level));
        bool resolvable = true;
        for (std::size_t k = 0; k < r.traj.t.size(); ++k) {
            const double t = r.traj.t[k];
            const cplx q = r.traj.q[k];
            if (resolvable) {
                if (k > 0) prop.advance(r.traj.q[k - 1], q, t - r.traj.t[k - 1]);
                const auto f = prop.field(q);
                try {
                    r.obs.push_back({t, q, mass(f), energy(f, config.params), boundary_residual(f, config.params)});
                    r.observables_end = t;
                    continue;
                } catch (const TailBoundError&) {
                    if (k == 0) throw;
                    resolvable = false;
                }
            }
            r.obs.push_back({t, q, nan, nan, cplx(nan, nan)});
        }
    } else {
        r.obs = observable_series(datum, config.params, r.traj, config.make_momentum_grid(level));
        r.observables_end = r.traj.t_end();
    }
    const double M0 = r.obs.front().mass, E0 = r.obs.front().energy;
    for (const auto& o : r.obs) {
        if (o.t > r.observables_end) break;
        r.mass_drift = std::max(r.mass_drift, std::abs(o.mass - M0) / std::max(M0, 1e-300));
        r.energy_drift = std::max(r.energy_drift, std::abs(o.energy - E0) / std::max(std::abs(E0), 1e-300));
        r.max_residual = std::max(r.max_residual, std::abs(o.residual));
    }
    return r;
}

void write_trajectory_csv(const fs::path& path, const std::vector<ObservableRecord>& obs) {
    auto out = open_out(path);
    out << "t,q_re,q_im,abs_q,mass,energy,residual\n";
    for (const auto& o : obs)
        out << o.t << ',' << o.q.real() << ',' << o.q.imag() << ',' << std::abs(o.q) << ',' << o.mass
            << ',' << o.energy << ',' << std::abs(o.residual) << '\n';
}

json level_summary(const LevelResult& r) {
    json j = {
        {"status", to_string(r.traj.status)},
        {"nodes", r.traj.t.size()},
        {"t_end", r.traj.t_end()},
        {"sup_q", r.traj.sup_abs()},
        {"q_end_re", r.traj.q.back().real()},
        {"q_end_im", r.traj.q.back().imag()},
        {"E0", r.obs.front().energy},
        {"M0", r.obs.front().mass},
        {"drift", {{"mass", r.mass_drift}, {"energy", r.energy_drift}}},
        {"max_boundary_residual", r.max_residual},
        {"fixed_point_residual", r.traj.fixed_point_residual},
        {"observables_t_end", r.observables_end},
    };
    if (r.traj.blowup) {
        const auto& b = *r.traj.blowup;
        j["T_star"] = b.t_star;
        j["blowup_window"] = {b.window_lo, b.window_hi};
        j["T_star_resolved"] = b.resolved;
    }
    return j;
}

// Exit status and summary of one scan cell or solve.
struct CellOutcome {
    json summary;
    ExitCode code = exit_ok;
};

CellOutcome guarded_solve(const RunConfig& config, const fs::path& dir, int levels) {
    CellOutcome out;
    try {
        out.summary = run_solve(config, dir, levels);
    } catch (...) {
        std::string cls, msg;
        out.code = classify_current_exception(cls, msg);
        out.summary = {{"status", "error"}, {"error_class", cls}, {"message", msg}};
    }
    return out;
}

std::vector<double> log_space(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1));
    return v;
}

// ---- verification suites ----

struct Check {
    std::string name;
    double value;
    double threshold;
    bool pass() const { return std::isfinite(value) && value <= threshold; }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<Check> suite_kernels() {
    std::vector<Check> c;
    for (double t : {1e-3, 0.1, 1.0, 10.0}) {
        c.push_back({"I(" + number_tag(t) + ") vs defining integral", rel(volterra_I(t), oracle::quad_defining_I(t)), 1e-9});
        c.push_back({"N(" + number_tag(t) + ") vs defining integral", rel(volterra_N(t), oracle::quad_defining_N(t)), 1e-9});
    }
    for (double x : {0.1, 1.0, 10.0})
        c.push_back({"K0(" + number_tag(x) + ") vs cosh integral", rel(macdonald_K0(x), oracle::quad_K0(x)), 1e-12});
    for (double x : {0.5, 1.0, 20.0}) {
        c.push_back({"si(" + number_tag(x) + ") vs quadrature", std::abs(sine_integral_shifted(x) - oracle::quad_si_shifted(x)), 1e-12});
        c.push_back({"ci(" + number_tag(x) + ") vs quadrature", std::abs(cosine_integral(x) - oracle::quad_ci(x)), 1e-12});
    }
    for (double t : {0.5, 1.0, 2.0})
        c.push_back({"Q(1," + number_tag(t) + ") vs contour integral", std::abs(q_series(1.0, t) - oracle::quad_Q(1.0, t)), 1e-10});
    const VolterraNTable table(10.0);
    double worst_n = 0.0, worst_k = 0.0;
    for (double t : log_space(1e-8, 10.0, 57)) {
        worst_n = std::max(worst_n, rel(table(t), volterra_N(t)));
        worst_k = std::max(worst_k, rel(table.scaled_kernel(t), t * volterra_I(t)));
    }
    c.push_back({"N table vs series", worst_n, 1e-10});
    c.push_back({"t I(t) from table derivative", worst_k, 1e-9});
    return c;
}

std::vector<Check> suite_operators() {
    std::vector<Check> c;
    const auto grid = TimeGrid::graded(1.0, 60, 0.7, 20);
    const auto N = table_for(grid);
    const auto w_ref = oracle::product_weights_oracle(grid);
    double worst = 0.0;
    for (std::size_t n = 1; n < grid.size(); ++n) {
        const auto w = product_weights(grid, n, N);
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(w[k] - w_ref[n][k]));
    }
    c.push_back({"product weights vs oracle N", worst, 1e-12});

    const auto ones = SampledSignal::from_function(grid, [](double) { return cplx(1.0); });
    const auto I1 = apply_I(ones, N);
    double worst_one = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) worst_one = std::max(worst_one, std::abs(I1.values[n] - volterra_N(grid[n])));
    c.push_back({"I applied to 1 equals N", worst_one, 1e-12});

    const auto J1 = apply_J(ones);
    double worst_j = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) worst_j = std::max(worst_j, std::abs(J1.values[n] - log_kernel_primitive(grid[n])));
    c.push_back({"J applied to 1 equals its primitive", worst_j, 1e-13});

    auto cosine = [](double t) { return cplx(std::cos(t)); };
    const auto coarse = TimeGrid::uniform(1.0, 50), fine = TimeGrid::uniform(1.0, 200);
    const double e_coarse = check_inversion(SampledSignal::from_function(coarse, cosine), table_for(coarse));
    const double e_fine = check_inversion(SampledSignal::from_function(fine, cosine), table_for(fine));
    c.push_back({"J I cos residual, 200 cells", e_fine, 5e-3});
    c.push_back({"J I cos residual shrinks 4x refinement (ratio fine/coarse)", e_fine / e_coarse, 0.5});

    InitialDatum datum;
    datum.q0 = 1.0;
    datum.regular = GaussianProfile{{1.0, 0.0}, 1.0};
    const VolterraNTable table(1.0);
    double worst_f = 0.0;
    for (double t : {0.25, 0.5}) {
        const cplx ref = datum.q0 + oracle::nested_I(
            [](double tau) { return oracle::forcing_integrand_oracle(1.0, 1.0, 1.0, 1.0, tau); }, t);
        worst_f = std::max(worst_f, std::abs(forcing_value(datum, t, table) - ref));
    }
    c.push_back({"forcing vs nested oracle quadrature", worst_f, 1e-8});
    return c;
}

std::vector<Check> suite_charge() {
    std::vector<Check> c;
    ModelParams params;
    params.sigma = 0.0;
    params.beta0 = 0.1;
    InitialDatum datum;
    datum.q0 = 1.0;
    datum.regular = GaussianProfile{{1.0, 0.0}, 1.0};
    const auto grid = TimeGrid::uniform(0.5, 12);
    SolverConfig config;
    const auto traj = solve_charge(datum, params, config, grid);
    std::vector<cplx> f(grid.size());
    f[0] = datum.q0;
    for (std::size_t n = 1; n < grid.size(); ++n)
        f[n] = datum.q0 + oracle::nested_I(
            [](double tau) { return oracle::forcing_integrand_oracle(1.0, 1.0, 1.0, 1.0, tau); }, grid[n]);
    const auto ref = oracle::picard_linear(f, 4.0 * std::numbers::pi * params.beta0 + kappa, grid);
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) worst = std::max(worst, std::abs(traj.q[n] - ref.q[n]));
    c.push_back({"linear charge vs global Picard oracle", worst, 1e-9});
    c.push_back({"fixed-point residual of the linear run", traj.fixed_point_residual, 1e-10});

    ModelParams defocusing;
    const auto smooth = compatible_gaussian_datum(1.0, 1.0, defocusing);
    const auto run = continue_until(smooth, defocusing, config, 1.0);
    c.push_back({"defocusing run reaches t = 1 (0 = completed)", run.status == RunStatus::completed ? 0.0 : 1.0, 0.0});

    ModelParams focusing;
    focusing.beta0 = -1.0;
    InitialDatum small;
    small.q0 = 0.2;
    double lo = 1e300, hi = 0.0;
    for (int level = 0; level < 2; ++level) {
        const auto t = continue_until(small, focusing, config.refined(level), 1.0);
        const double w = t.blowup ? t.blowup->window_hi : std::nan("");
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    c.push_back({"focusing fold time spread across refinement (relative)", (hi - lo) / hi, 1e-3});
    return c;
}

std::vector<Check> suite_conservation() {
    std::vector<Check> c;
    RunConfig config;
    config.datum.profile = ProfileKind::compatible;
    config.grid.t_max = 2.0;
    config.validate();
    const auto r = solve_level(config, config.make_datum(), 0);
    c.push_back({"run completed (0 = completed)", r.traj.status == RunStatus::completed ? 0.0 : 1.0, 0.0});
    c.push_back({"relative mass drift on [0, 2]", r.mass_drift, 1e-5});
    c.push_back({"relative energy drift on [0, 2]", r.energy_drift, 1e-5});
    c.push_back({"boundary condition residual", r.max_residual, 1e-2});
    return c;
}

} // namespace

fs::path default_out_dir() {
    if (const char* env = std::getenv("PNLS_OUT_DIR"); env && *env) return env;
    return ".";
}

ExitCode classify_current_exception(std::string& class_name, std::string& message) {
    try {
        throw;
    } catch (const ConfigParseError& e) {
        class_name = "config";
        message = e.what();
        return exit_usage;
    } catch (const ConfigError& e) {
        class_name = "config";
        message = e.what();
        return exit_usage;
    } catch (const ConvergenceError& e) {
        class_name = "convergence";
        message = e.what();
        return exit_convergence;
    } catch (const TailBoundError& e) {
        class_name = "tail_bound";
        message = e.what();
        return exit_tail_bound;
    } catch (const ResolutionError& e) {
        class_name = "resolution";
        message = e.what();
        return exit_resolution;
    } catch (const DomainError& e) {
        class_name = "domain";
        message = e.what();
        return exit_domain;
    } catch (const std::ios_base::failure& e) {
        class_name = "io";
        message = e.what();
        return exit_io;
    } catch (const fs::filesystem_error& e) {
        class_name = "io";
        message = e.what();
        return exit_io;
    } catch (const std::exception& e) {
        class_name = "internal";
        message = e.what();
        return exit_internal;
    }
}

json run_solve(const RunConfig& config, const fs::path& dir, int levels) {
    const InitialDatum datum = config.make_datum();
    const std::string& stem = config.outputs.name;
    json manifest = json::array();
    json per_level = json::array();
    std::vector<LevelResult> results;
    for (int level = 0; level <= levels; ++level) {
        results.push_back(solve_level(config, datum, level));
        const auto& r = results.back();
        json s = level_summary(r);
        s["level"] = level;
        if (config.outputs.csv) {
            const std::string name = levels == 0 ? stem + ".csv" : stem + "_L" + std::to_string(level) + ".csv";
            write_trajectory_csv(dir / name, r.obs);
            manifest.push_back(name);
        }
        per_level.push_back(s);
    }
    const auto& base = results.front();
    if (config.outputs.csv) {
        const auto grid = config.make_momentum_grid(0);
        for (std::size_t i = 0; i < config.outputs.spectral_times.size(); ++i) {
            const double t = config.outputs.spectral_times[i];
            if (t > base.traj.t_end()) continue; // beyond a blow-up
            const std::string name = stem + "_spectral_" + std::to_string(i) + ".csv";
            reconstruct_spectral(datum, base.traj, t, grid).write_csv(dir / name);
            manifest.push_back(name);
        }
    }
    json summary = per_level.front();
    summary.erase("level");
    summary["outside_theory"] = base.traj.outside_theory;
    if (levels > 0) {
        summary["levels"] = per_level;
        double sup_lo = 1e300, sup_hi = 0.0, q_spread = 0.0;
        for (std::size_t l = 0; l < results.size(); ++l) {
            sup_lo = std::min(sup_lo, results[l].traj.sup_abs());
            sup_hi = std::max(sup_hi, results[l].traj.sup_abs());
            if (l > 0 && results[l].traj.t_end() == results[l - 1].traj.t_end())
                q_spread = std::max(q_spread, std::abs(results[l].traj.q.back() - results[l - 1].traj.q.back()));
        }
        summary["refinement_spread"] = {{"sup_q", sup_hi - sup_lo}, {"q_end", q_spread}};
    }
    summary["config"] = to_json(config);
    if (config.outputs.json) manifest.push_back(stem + ".summary.json");
    summary["manifest"] = manifest;
    if (config.outputs.json) write_json(dir / (stem + ".summary.json"), summary);
    return summary;
}

int cmd_kernel_table(const KernelTableOptions& opts, const CommonOptions& common) {
    if (!(opts.t_max > opts.t_min) || opts.points < 2)
        throw ConfigError("kernel-table", "need t_min < t_max and at least 2 points");
    if (opts.log_spacing && !(opts.t_min > 0.0)) throw ConfigError("--tmin", "log spacing needs t_min > 0");
    std::function<cplx(double)> value;
    const EvalPolicy policy;
    if (opts.function == "I") value = [&](double t) { return cplx(volterra_I(t, policy)); };
    else if (opts.function == "N") value = [&](double t) { return cplx(volterra_N(t, policy)); };
    else if (opts.function == "K0") value = [&](double t) { return cplx(macdonald_K0(t, policy)); };
    else if (opts.function == "sici") value = [&](double t) {
        const auto sc = sici(t, policy);
        return cplx(sc.si, sc.ci);
    };
    else if (opts.function == "Q") value = [&](double t) { return q_series(opts.lambda, t, policy); };
    else throw ConfigError("--function", "expected I, N, K0, sici or Q");

    const fs::path dir = resolve_out_dir(common, {});
    const std::string name = "kernel_" + opts.function + ".csv";
    auto out = open_out(dir / name);
    out << "t,value_re,value_im\n";
    for (int i = 0; i < opts.points; ++i) {
        const double x = double(i) / (opts.points - 1);
        const double t = opts.log_spacing ? opts.t_min * std::pow(opts.t_max / opts.t_min, x)
                                          : opts.t_min + (opts.t_max - opts.t_min) * x;
        const cplx v = value(t);
        out << t << ',' << v.real() << ',' << v.imag() << '\n';
    }
    out.close();
    std::cout << "wrote " << (dir / name).string() << '\n';
    return exit_ok;
}

int cmd_solve(const fs::path& config_path, const CommonOptions& common) {
    const RunConfig config = load_config(config_path);
    const fs::path dir = resolve_out_dir(common, config.outputs.directory);
    const int levels = common.refine.value_or(config.solver.refinement_levels);
    if (levels < 0) throw ConfigError("--refine", "must be nonnegative");
    const auto out = guarded_solve(config, dir, levels);
    const auto& s = out.summary;
    if (out.code != exit_ok) {
        std::cerr << "error (" << s["error_class"].get<std::string>() << "): " << s["message"].get<std::string>() << '\n';
        return out.code;
    }
    std::cout << "status " << s["status"].get<std::string>() << ", nodes " << s["nodes"] << ", sup|q| "
              << s["sup_q"] << ", mass drift " << s["drift"]["mass"] << ", energy drift " << s["drift"]["energy"];
    if (s.contains("T_star")) std::cout << ", T* " << s["T_star"];
    std::cout << '\n';
    return exit_ok;
}

int cmd_scan(const fs::path& config_path, const std::vector<double>& beta0_list,
             const std::vector<double>& sigma_list, const CommonOptions& common) {
    const RunConfig base = load_config(config_path);
    const fs::path dir = resolve_out_dir(common, base.outputs.directory);
    const int levels = common.refine.value_or(base.solver.refinement_levels);
    if (levels < 0) throw ConfigError("--refine", "must be nonnegative");
    const auto betas = beta0_list.empty() ? std::vector<double>{base.params.beta0} : beta0_list;
    const auto sigmas = sigma_list.empty() ? std::vector<double>{base.params.sigma} : sigma_list;

    struct Cell {
        double beta0, sigma;
        std::string name;
        CellOutcome outcome;
    };
    std::vector<Cell> cells;
    for (double b : betas)
        for (double s : sigmas)
            cells.push_back({b, s, base.outputs.name + "_beta0_" + number_tag(b) + "_sigma_" + number_tag(s), {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            Cell& cell = cells[i];
            RunConfig cfg = base;
            cfg.params.beta0 = cell.beta0;
            cfg.params.sigma = cell.sigma;
            cfg.outputs.name = cell.name;
            try {
                cfg.validate();
                cell.outcome = guarded_solve(cfg, dir, levels);
            } catch (...) {
                std::string cls, msg;
                cell.outcome.code = classify_current_exception(cls, msg);
                cell.outcome.summary = {{"status", "error"}, {"error_class", cls}, {"message", msg}};
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(common.jobs, int(cells.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    json list = json::array();
    json manifest = json::array();
    ExitCode code = exit_ok;
    for (const auto& cell : cells) {
        json entry = {{"beta0", cell.beta0}, {"sigma", cell.sigma}, {"name", cell.name}, {"summary", cell.outcome.summary}};
        list.push_back(entry);
        if (cell.outcome.summary.contains("manifest"))
            for (const auto& f : cell.outcome.summary["manifest"]) manifest.push_back(f);
        if (code == exit_ok) code = cell.outcome.code;
        std::cout << cell.name << ": " << cell.outcome.summary["status"].get<std::string>();
        if (cell.outcome.summary.contains("T_star")) std::cout << " T* " << cell.outcome.summary["T_star"];
        if (cell.outcome.summary.contains("message")) std::cout << " (" << cell.outcome.summary["message"].get<std::string>() << ")";
        std::cout << '\n';
    }
    manifest.push_back(base.outputs.name + "_scan.json");
    write_json(dir / (base.outputs.name + "_scan.json"), {{"cells", list}, {"manifest", manifest}});
    return code;
}

int cmd_verify(const std::string& suite, const CommonOptions& common) {
    std::vector<Check> checks;
    if (suite == "kernels") checks = suite_kernels();
    else if (suite == "operators") checks = suite_operators();
    else if (suite == "charge") checks = suite_charge();
    else if (suite == "conservation") checks = suite_conservation();
    else throw ConfigError("--suite", "expected kernels, operators, charge or conservation");

    const fs::path dir = resolve_out_dir(common, {});
    json list = json::array();
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.pass();
        std::cout << (c.pass() ? "PASS " : "FAIL ") << c.name << ": " << std::setprecision(3)
                  << std::scientific << c.value << " (limit " << c.threshold << ")\n";
        list.push_back({{"check", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass()}});
    }
    const std::string name = "verify_" + suite + ".json";
    write_json(dir / name, {{"suite", suite}, {"pass", all}, {"checks", list}, {"manifest", {name}}});
    return all ? exit_ok : exit_check_failed;
}

} // namespace pnls::cli
