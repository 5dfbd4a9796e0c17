#pragma once

#include "pnls/field.hpp"
#include "pnls/trajectory.hpp"
#include "pnls/volterra_ops.hpp"

#include <optional>

namespace pnls {

struct SolverConfig {
    double step_init = 1e-2;   // width of the first uniform cell after start-up
    double step_min = 1e-12;
    double step_max = 1e-2;
    double step_growth = 1.25;
    double change_tol = 2e-3;  // accepted |q_n - q_{n-1}| relative to max(1, |q|)
    double picard_tol = 1e-12;
    int picard_max_iters = 200;
    double blowup_threshold = 1e6;
    int refinement_levels = 0; // extra runs at refined(1..levels) for spread estimates
    int startup_cells = 40;    // geometric cells toward t = 0
    double startup_ratio = 0.7;

    // Throws DomainError; pass the initial charge to check the blow-up threshold.
    void validate(cplx q0) const;
    // Steps, tolerances and start-up spacing refined `level` times by a factor of 2.
    SolverConfig refined(int level) const;
};

// Start-up geometric layer followed by cells of width config.step_init up to T.
TimeGrid solver_grid(const SolverConfig& config, double T);

// Integrand of the forcing term at tau: regular-part evolution plus the bounded part of the
// singular evolution; the logarithmic remainder enters analytically as q0.
cplx forcing_integrand(const InitialDatum& datum, double tau);

// f(t) = q0 + int_0^t I(t - tau) g(tau) dtau with g = forcing_integrand, by adaptive
// quadrature in log(t - tau); independent of any time grid.
cplx forcing_value(const InitialDatum& datum, double t, const VolterraNTable& N);

SampledSignal build_forcing(const InitialDatum& datum, const TimeGrid& grid);
SampledSignal build_forcing(const InitialDatum& datum, const TimeGrid& grid, const VolterraNTable& N);

// 4 pi beta0 |q|^(2 sigma) q + kappa q
cplx memory_term(const ModelParams& params, cplx q);

// One application of G(q) = f - I[memory_term(q)] with implicit sampling.
SampledSignal picard_map(const SampledSignal& q, const SampledSignal& f, const ModelParams& params);
SampledSignal picard_map(const SampledSignal& q, const SampledSignal& f, const ModelParams& params,
                         const VolterraNTable& N);

// Solves q + w F(q) = rhs for scalar complex q. Returns nullopt past the fold of the
// focusing branch (no solution connected to rhs).
std::optional<cplx> solve_local(cplx rhs, double w, const ModelParams& params, const SolverConfig& config);

// Marches the charge equation on a fixed grid. A step without solution ends the run with
// status blow_up and the resolved prefix.
ChargeTrajectory solve_charge(const InitialDatum& datum, const ModelParams& params,
                              const SolverConfig& config, const TimeGrid& grid);

// Adaptive continuation to T_max with blow-up detection.
ChargeTrajectory continue_until(const InitialDatum& datum, const ModelParams& params,
                                const SolverConfig& config, double T_max);

// max_n |(1/4pi)(J q)(t_n) + int_0^{t_n} memory_term(q)/4pi - int_0^{t_n} (U0(tau) psi0)(0) dtau|,
// the charge equation with J applied, evaluated on the trajectory nodes by trapezoid rules.
double inverse_identity_residual(const InitialDatum& datum, const ModelParams& params,
                                 const ChargeTrajectory& traj);

} // namespace pnls
