#pragma once

#include "pnls/trajectory.hpp"
#include "pnls/volterra_ops.hpp"

#include <complex>
#include <filesystem>
#include <numbers>
#include <variant>
#include <vector>

namespace pnls {

// Coefficient of the linear memory term of the charge equation, -2(log 2 - gamma + i pi/4).
inline const cplx kappa{-2.0 * (std::numbers::ln2 - euler_gamma), -0.5 * std::numbers::pi};

struct ModelParams {
    double sigma = 1.0;
    double beta0 = 1.0;
    bool experimental_sigma = false; // admit sigma in (0, 1/2)

    void validate() const;
    bool outside_theory() const { return sigma > 0.0 && sigma < 0.5; }
    // beta0 |q|^(2 sigma) q; sigma = 0 gives beta0 q.
    cplx nonlinearity(cplx q) const;
};

// Radial Fourier profile a exp(-b p^2) of the regular part.
struct GaussianProfile {
    cplx amplitude{1.0, 0.0};
    double width = 1.0;
};

// Radial samples of the regular part's Fourier transform, linear in p between nodes and
// continued by |p|^-decay_exponent beyond the last node.
struct SampledProfile {
    std::vector<double> p;
    std::vector<cplx> values;
    double decay_exponent = 4.0;

    // CSV with header `p,re,im`.
    static SampledProfile load_csv(const std::filesystem::path& path, double decay_exponent);
};

class RegularProfile {
public:
    RegularProfile() : repr_(GaussianProfile{{0.0, 0.0}, 1.0}) {}
    RegularProfile(GaussianProfile g) : repr_(g) {}
    RegularProfile(SampledProfile s) : repr_(std::move(s)) {}

    static RegularProfile zero() { return RegularProfile(); }

    bool is_gaussian() const { return std::holds_alternative<GaussianProfile>(repr_); }
    const GaussianProfile* gaussian() const { return std::get_if<GaussianProfile>(&repr_); }
    const SampledProfile* sampled() const { return std::get_if<SampledProfile>(&repr_); }

    // Fourier transform at radial momentum p >= 0.
    cplx at(double p) const;

    // (U0(t) phi)(0) = int_0^inf exp(-i p^2 t) hat(phi)(p) p dp.
    cplx center_value(double t) const;

    // Upper bound for int_{p > P} p^eps |hat(phi)| p dp beyond the sampled range (0 for Gaussians).
    double tail_bound(double eps) const;

    // Throws DomainError for invalid profiles, TailBoundError when the declared decay does
    // not make (1 + p^eps) hat(phi) integrable.
    void validate(double eps) const;

private:
    std::variant<GaussianProfile, SampledProfile> repr_;
};

struct InitialDatum {
    double lambda = 1.0;
    cplx q0{0.0, 0.0};
    RegularProfile regular;
    double epsilon = 0.5;

    void validate() const;
};

// Gaussian datum whose regular part satisfies the nonlinear boundary condition at t = 0,
// so the charge starts without a logarithmic transient.
InitialDatum compatible_gaussian_datum(cplx q0, double width, const ModelParams& params,
                                       double lambda = 1.0);

cplx free_regular_at_center(const InitialDatum& datum, double t);

struct SingularSplit {
    cplx log_part;    // exp(i lambda t) (-gamma - log t) / 2
    cplx smooth_part; // exp(i lambda t) (-log lambda + Q(lambda; t)/pi) / 2
    cplx total() const { return log_part + smooth_part; }
};

// Free evolution of K0(sqrt(lambda)|x|) evaluated at the origin, t > 0.
cplx free_singular_at_center(double lambda, double t);
SingularSplit free_singular_split(double lambda, double t);

// Composite Gauss-Legendre rule in rho = p^2 on [0, rho_max].
struct MomentumGrid {
    std::vector<double> rho;
    std::vector<double> weight;
    double rho_max = 0.0;
    double panel_width = 0.0;

    static MomentumGrid make(double rho_max = 2000.0, double panel_width = 1.0, int points = 8);
    std::size_t size() const { return rho.size(); }
};

struct SpectralField {
    std::vector<double> p;     // radial momenta
    std::vector<double> weight; // d(p^2) quadrature weights
    std::vector<cplx> values;  // hat(psi_t)(p)
    cplx q_at_t{};
    double t = 0.0;
    double rho_max = 0.0;

    void write_csv(const std::filesystem::path& path) const;
};

// Time-marches the Duhamel term exp(-i p^2 (t - tau)) q(tau) with exact cell integrals
// against piecewise-linear q.
class SpectralPropagator {
public:
    SpectralPropagator(const InitialDatum& datum, const MomentumGrid& grid);

    void advance(cplx q_left, cplx q_right, double h);
    SpectralField field(cplx q_now) const;
    double time() const { return t_; }

private:
    MomentumGrid grid_;
    std::vector<cplx> initial_;
    std::vector<cplx> duhamel_;
    double t_ = 0.0;
};

// Field at any t in [0, t_end]; between nodes q is interpolated linearly.
// Oscillation budget: panel_width * t must stay below 2 pi.
SpectralField reconstruct_spectral(const InitialDatum& datum, const ChargeTrajectory& traj,
                                   double t, const MomentumGrid& grid);

double mass(const SpectralField& field);
double energy(const SpectralField& field, const ModelParams& params);
// Regular part at the origin minus the value the nonlinear boundary condition demands.
cplx boundary_residual(const SpectralField& field, const ModelParams& params);

// Squared Gagliardo seminorm int int |f(t)-f(s)|^2 / |t-s|^(1+2 nu) of the piecewise-linear
// interpolant; at least 4 nodes.
double h_half_seminorm(const SampledSignal& f, double nu = 0.5);

struct ObservableRecord {
    double t;
    cplx q;
    double mass;
    double energy;
    cplx residual;
};

std::vector<ObservableRecord> observable_series(const InitialDatum& datum,
                                                const ModelParams& params,
                                                const ChargeTrajectory& traj,
                                                const MomentumGrid& grid);

} // namespace pnls
