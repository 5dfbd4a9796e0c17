#include "pnls/charge.hpp"

#include "pnls/errors.hpp"
#include "pnls/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pnls {

namespace {

constexpr double pi = std::numbers::pi;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

} // namespace

void SolverConfig::validate(cplx q0) const {
    if (!(step_min > 0.0)) throw DomainError("solver.step_min must be positive");
    if (!(step_init >= step_min)) throw DomainError("solver.step_init must be >= step_min");
    if (!(step_max >= step_init)) throw DomainError("solver.step_max must be >= step_init");
    if (!(step_growth >= 1.0)) throw DomainError("solver.step_growth must be >= 1");
    if (!(change_tol > 0.0)) throw DomainError("solver.change_tol must be positive");
    if (!(picard_tol > 0.0 && picard_tol <= 1e-4)) throw DomainError("solver.picard_tol must lie in (0, 1e-4]");
    if (picard_max_iters < 1) throw DomainError("solver.picard_max_iters must be positive");
    if (!(blowup_threshold > 10.0 * std::abs(q0)))
        throw DomainError("solver.blowup_threshold must exceed 10 |q0|");
    if (refinement_levels < 0) throw DomainError("solver.refinement_levels must be nonnegative");
    if (startup_cells < 0) throw DomainError("solver.startup_cells must be nonnegative");
    if (!(startup_ratio > 0.0 && startup_ratio < 1.0))
        throw DomainError("solver.startup_ratio must lie in (0, 1)");
}

SolverConfig SolverConfig::refined(int level) const {
    SolverConfig c = *this;
    const double f = std::ldexp(1.0, -level);
    c.step_init *= f;
    c.step_max *= f;
    c.step_min = std::min(c.step_min, c.step_init);
    c.change_tol *= f;
    return c;
}

TimeGrid solver_grid(const SolverConfig& config, double T) {
    if (!(T > 0.0)) throw DomainError("solver_grid: T must be positive");
    const double h = config.step_init;
    const double r = config.startup_ratio;
    const double t_c = h / (1.0 - r);
    std::vector<double> nodes{0.0};
    if (t_c >= T) {
        // horizon inside the start-up layer: geometric nodes only
        for (int m = config.startup_cells; m >= 1; --m)
            if (T * std::pow(r, m) > 0.0) nodes.push_back(T * std::pow(r, m));
        nodes.push_back(T);
        return TimeGrid(std::move(nodes), Grading::geometric, r);
    }
    for (int m = config.startup_cells; m >= 1; --m) nodes.push_back(t_c * std::pow(r, m));
    const int n_uniform = std::max(1, int(std::ceil((T - t_c) / h - 1e-9)));
    const double hu = (T - t_c) / n_uniform;
    nodes.push_back(t_c);
    for (int k = 1; k <= n_uniform; ++k) nodes.push_back(t_c + hu * k);
    nodes.back() = T;
    return TimeGrid(std::move(nodes), config.startup_cells > 0 ? Grading::geometric : Grading::uniform, r);
}

cplx forcing_integrand(const InitialDatum& datum, double tau) {
    if (tau < 0.0) throw DomainError("forcing_integrand: tau must be nonnegative");
    const double lambda = datum.lambda;
    const cplx regular = 4.0 * pi * datum.regular.center_value(tau);
    if (datum.q0 == cplx{}) return regular;
    const cplx phase = std::exp(cplx(0.0, lambda * tau));
    const cplx bounded_log = tau > 0.0 ? (phase - 1.0) * (-euler_gamma - std::log(tau)) : cplx{};
    const cplx smooth = phase * (-pi * std::log(lambda) + q_series(lambda, tau)) / pi;
    return regular + datum.q0 * (bounded_log + smooth);
}

cplx forcing_value(const InitialDatum& datum, double t, const VolterraNTable& N) {
    if (t < 0.0) throw DomainError("forcing_value: t must be nonnegative");
    if (t == 0.0) return datum.q0;
    // s = t - tau = exp(u); below s_min the integrand is frozen at g(t)
    const double s_min = 1e-30 * t;
    const cplx head = forcing_integrand(datum, t) * N(s_min);
    auto integrand = [&](double u) {
        const double s = std::exp(u);
        return N.scaled_kernel(s) * forcing_integrand(datum, std::max(t - s, 0.0));
    };
    const auto r = quad::integrate_complex(integrand, std::log(s_min), std::log(t), 1e-13, 1e-11, 4000, 16);
    if (!r.converged)
        throw ConvergenceError("forcing_value: quadrature did not converge", std::abs(r.value), r.error);
    return datum.q0 + head + r.value;
}

SampledSignal build_forcing(const InitialDatum& datum, const TimeGrid& grid, const VolterraNTable& N) {
    datum.validate();
    std::vector<cplx> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = forcing_value(datum, grid[i], N);
    return SampledSignal(grid, std::move(f));
}

SampledSignal build_forcing(const InitialDatum& datum, const TimeGrid& grid) {
    return build_forcing(datum, grid, table_for(grid));
}

cplx memory_term(const ModelParams& params, cplx q) {
    return 4.0 * pi * params.nonlinearity(q) + kappa * q;
}

SampledSignal picard_map(const SampledSignal& q, const SampledSignal& f, const ModelParams& params,
                         const VolterraNTable& N) {
    if (q.grid.nodes() != f.grid.nodes()) throw DomainError("picard_map: grids differ");
    const auto& v = q.values;
    std::vector<cplx> hist(v.size() - 1);
    for (std::size_t k = 0; k + 1 < v.size(); ++k) hist[k] = memory_term(params, 0.5 * (v[k] + v[k + 1]));
    std::vector<cplx> out(v.size());
    out[0] = f.values[0];
    for (std::size_t n = 1; n < v.size(); ++n) {
        const auto w = product_weights(q.grid, n, N);
        cplx acc{};
        for (std::size_t k = 0; k + 1 < n; ++k) acc += w[k] * hist[k];
        acc += w[n - 1] * memory_term(params, v[n]);
        out[n] = f.values[n] - acc;
    }
    return SampledSignal(q.grid, std::move(out));
}

SampledSignal picard_map(const SampledSignal& q, const SampledSignal& f, const ModelParams& params) {
    return picard_map(q, f, params, table_for(q.grid));
}

std::optional<cplx> solve_local(cplx rhs, double w, const ModelParams& params, const SolverConfig& config) {
    const cplx alpha = 1.0 + w * kappa;
    const double c = 4.0 * pi * params.beta0 * w;
    const double sigma = params.sigma;
    if (sigma == 0.0 || c == 0.0) {
        const cplx denom = alpha + c;
        if (std::abs(denom) == 0.0) return std::nullopt;
        return rhs / denom;
    }
    const double R = std::abs(rhs);
    if (R == 0.0) return cplx{};
    // q = rhs / (alpha + c s), s = |q|^(2 sigma); |q| solves phi(r) = r |alpha + c r^(2 sigma)| = R
    auto phi = [&](double r) { return r * std::abs(alpha + c * std::pow(r, 2.0 * sigma)); };
    // phi' = 0 where |alpha|^2 + 2(1+sigma) c Re(alpha) s + (1+2 sigma) c^2 s^2 = 0
    const double qa = (1.0 + 2.0 * sigma) * c * c;
    const double qb = 2.0 * (1.0 + sigma) * c * alpha.real();
    const double qc = std::norm(alpha);
    const double disc = qb * qb - 4.0 * qa * qc;
    double r_hi = -1.0;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        // smallest positive root, in the cancellation-free form
        const double s1 = (-qb - std::copysign(sq, qb)) / (2.0 * qa);
        const double s2 = qc / (qa * s1);
        double s_peak = -1.0;
        for (double s : {s1, s2})
            if (s > 0.0 && (s_peak < 0.0 || s < s_peak)) s_peak = s;
        if (s_peak > 0.0) {
            const double r_peak = std::pow(s_peak, 0.5 / sigma);
            if (R > phi(r_peak)) return std::nullopt;
            r_hi = r_peak;
        }
    }
    if (r_hi < 0.0) {
        r_hi = std::max(R / std::abs(alpha), 1e-300);
        while (phi(r_hi) < R) r_hi *= 2.0;
    }
    double lo = 0.0, hi = r_hi;
    for (int it = 0; it < config.picard_max_iters && hi - lo > 1e-3 * config.picard_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (phi(mid) < R ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    const cplx q = rhs / (alpha + c * std::pow(r, 2.0 * sigma));
    const double scale = std::max({1.0, R, std::abs(w * memory_term(params, q))});
    const double defect = std::abs(q + w * memory_term(params, q) - rhs);
    if (!finite(q) || defect > config.picard_tol * scale)
        throw ConvergenceError("solve_local: scalar step did not converge", std::abs(q), defect);
    return q;
}

namespace {

// Incremental marching state shared by the fixed-grid and adaptive drivers.
class Marcher {
public:
    Marcher(const InitialDatum& datum, const ModelParams& params, const SolverConfig& config,
            const VolterraNTable& N)
        : datum_(datum), params_(params), config_(config), N_(N) {
        t_.push_back(0.0);
        q_.push_back(datum.q0);
    }

    // Tries the node t_new > t_last; returns q there or nullopt past the fold.
    std::optional<cplx> trial(double t_new) const {
        const std::size_t n = t_.size();
        cplx rhs = forcing_value(datum_, t_new, N_);
        double upper = N_(t_new - t_[0]);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double lower = N_(t_new - t_[k + 1]);
            rhs -= (upper - lower) * cell_memory_[k];
            upper = lower;
        }
        return solve_local(rhs, upper, params_, config_);
    }

    void accept(double t_new, cplx q_new) {
        cell_memory_.push_back(memory_term(params_, 0.5 * (q_.back() + q_new)));
        t_.push_back(t_new);
        q_.push_back(q_new);
    }

    const std::vector<double>& t() const { return t_; }
    const std::vector<cplx>& q() const { return q_; }

private:
    const InitialDatum& datum_;
    const ModelParams& params_;
    const SolverConfig& config_;
    const VolterraNTable& N_;
    std::vector<double> t_;
    std::vector<cplx> q_;
    std::vector<cplx> cell_memory_;
};

double fixed_point_residual(const ChargeTrajectory& traj, const InitialDatum& datum,
                            const ModelParams& params, const VolterraNTable& N) {
    if (traj.t.size() < 2) return 0.0;
    const auto grid = traj.grid();
    const auto f = build_forcing(datum, grid, N);
    const auto G = picard_map(traj.signal(), f, params, N);
    double r = 0.0;
    for (std::size_t i = 0; i < G.size(); ++i) r = std::max(r, std::abs(G.values[i] - traj.q[i]));
    return r;
}

// Reciprocal extrapolation of |q| through its last decade of growth.
BlowUpInfo estimate_blowup(const std::vector<double>& t, const std::vector<cplx>& q, double window_hi) {
    BlowUpInfo info;
    info.window_lo = t.back();
    info.window_hi = std::max(window_hi, t.back());
    const double top = std::abs(q.back());
    std::size_t j = q.size() - 1;
    while (j > 0 && std::abs(q[j - 1]) > 0.1 * top) --j;
    if (j == 0 || std::abs(q[j - 1]) == 0.0 || q.size() - j < 2) {
        info.t_star = 0.5 * (info.window_lo + info.window_hi);
        return info;
    }
    --j; // first node at or below a tenth of the final modulus
    // least-squares line through (t_i, 1/|q_i|) over the decade
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    const double m = double(q.size() - j);
    for (std::size_t i = j; i < q.size(); ++i) {
        const double y = 1.0 / std::abs(q[i]);
        st += t[i];
        sy += y;
        stt += t[i] * t[i];
        sty += t[i] * y;
    }
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    const double intercept = (sy - slope * st) / m;
    if (!(slope < 0.0)) {
        info.t_star = 0.5 * (info.window_lo + info.window_hi);
        return info;
    }
    info.resolved = true;
    info.t_star = std::max(-intercept / slope, t.back());
    info.window_hi = std::max(info.window_hi, info.t_star);
    return info;
}

ChargeTrajectory finish(const Marcher& m, const InitialDatum& datum, const ModelParams& params,
                        const VolterraNTable& N) {
    ChargeTrajectory traj;
    traj.t = m.t();
    traj.q = m.q();
    traj.outside_theory = params.outside_theory();
    traj.fixed_point_residual = fixed_point_residual(traj, datum, params, N);
    return traj;
}

void validate_inputs(const InitialDatum& datum, const ModelParams& params, const SolverConfig& config) {
    datum.validate();
    params.validate();
    config.validate(datum.q0);
}

} // namespace

ChargeTrajectory solve_charge(const InitialDatum& datum, const ModelParams& params,
                              const SolverConfig& config, const TimeGrid& grid) {
    validate_inputs(datum, params, config);
    const auto N = table_for(grid);
    Marcher m(datum, params, config, N);
    std::optional<double> failed_at;
    for (std::size_t n = 1; n < grid.size(); ++n) {
        const auto q = m.trial(grid[n]);
        if (!q || std::abs(*q) > config.blowup_threshold) {
            if (q) m.accept(grid[n], *q);
            failed_at = grid[n];
            break;
        }
        m.accept(grid[n], *q);
    }
    auto traj = finish(m, datum, params, N);
    if (failed_at) {
        traj.status = RunStatus::blow_up;
        traj.blowup = estimate_blowup(traj.t, traj.q, *failed_at);
    }
    return traj;
}

ChargeTrajectory continue_until(const InitialDatum& datum, const ModelParams& params,
                                const SolverConfig& config, double T_max) {
    if (!(T_max > 0.0)) throw DomainError("continue_until: T_max must be positive");
    validate_inputs(datum, params, config);
    const VolterraNTable N(std::max(T_max * 1.0001, 1e-3));
    Marcher m(datum, params, config, N);
    const double startup_growth = 1.0 / config.startup_ratio;
    double h = std::max(config.step_init * std::pow(config.startup_ratio, config.startup_cells),
                        config.step_min);
    std::optional<double> failed_at;
    while (m.t().back() < T_max) {
        const double t_last = m.t().back();
        const cplx q_last = m.q().back();
        // below a few ulps of t the node would not advance
        const double floor = std::max(config.step_min, 64.0 * std::numeric_limits<double>::epsilon() * t_last);
        h = std::max(h, floor);
        double step = std::min(h, T_max - t_last);
        if (T_max - t_last - step < 1e-3 * step) step = T_max - t_last;
        const double t_new = step == T_max - t_last ? T_max : t_last + step;
        const auto q = m.trial(t_new);
        const bool fold = !q;
        const bool too_fast =
            q && std::abs(*q - q_last) > config.change_tol * std::max(1.0, std::abs(q_last));
        if ((fold || too_fast) && step > floor) {
            h = std::max(0.5 * step, floor);
            continue;
        }
        if (fold) {
            if (m.q().size() >= 2 && std::abs(q_last) < std::abs(m.q()[m.q().size() - 2]))
                throw ConvergenceError("continue_until: step floor reached while |q| is decreasing",
                                       std::abs(q_last), floor);
            failed_at = t_new;
            break;
        }
        m.accept(t_new, *q);
        if (std::abs(*q) > config.blowup_threshold) {
            failed_at = t_new;
            break;
        }
        const double growth = step < config.step_init ? startup_growth : config.step_growth;
        h = std::min(step * growth, config.step_max);
    }
    auto traj = finish(m, datum, params, N);
    if (failed_at) {
        traj.status = RunStatus::blow_up;
        traj.blowup = estimate_blowup(traj.t, traj.q, *failed_at);
    }
    return traj;
}

double inverse_identity_residual(const InitialDatum& datum, const ModelParams& params,
                                 const ChargeTrajectory& traj) {
    if (traj.t.size() < 2) return 0.0;
    const auto grid = traj.grid();
    const auto Jq = apply_J(traj.signal());
    std::vector<cplx> mem(traj.q.size()), g(traj.q.size());
    for (std::size_t i = 0; i < traj.q.size(); ++i) {
        mem[i] = memory_term(params, traj.q[i]) / (4.0 * pi);
        g[i] = forcing_integrand(datum, traj.t[i]) / (4.0 * pi);
    }
    const auto mem_int = cumulative_integral(SampledSignal(grid, mem));
    const auto g_int = cumulative_integral(SampledSignal(grid, g));
    double r = 0.0;
    for (std::size_t n = 1; n < traj.t.size(); ++n) {
        const cplx lhs = Jq.values[n] / (4.0 * pi) + mem_int.values[n];
        const cplx rhs = g_int.values[n] + datum.q0 / (4.0 * pi) * log_kernel_primitive(traj.t[n]);
        r = std::max(r, std::abs(lhs - rhs));
    }
    return r;
}

} // namespace pnls
