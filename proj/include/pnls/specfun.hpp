#pragma once

#include <complex>
#include <vector>

namespace pnls {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

struct EvalPolicy {
    double rel_tol = 1e-10;
    int series_cutoff = 400;
    int quad_nodes = 256;

    // Throws DomainError unless rel_tol in (0, 1e-3], series_cutoff >= 16, quad_nodes >= 32.
    void validate() const;
};

/// Volterra function of order -1, I(t) = int_0^inf t^(s-1)/Gamma(s) ds, for t > 0.
double volterra_I(double t, const EvalPolicy& policy = {});

/// Antiderivative of volterra_I vanishing at 0; equals the order-0 Volterra function
/// int_0^inf t^s/Gamma(s+1) ds.
double volterra_N(double t, const EvalPolicy& policy = {});

/// Modified Bessel function of the second kind, order zero.
double macdonald_K0(double x, const EvalPolicy& policy = {});

struct SiCi {
    double si; // Si(x) - pi/2
    double ci; // Ci(x)
};

/// Shifted sine integral si(x) = Si(x) - pi/2, x >= 0.
double sine_integral_shifted(double x, const EvalPolicy& policy = {});
/// Cosine integral Ci(x), x > 0.
double cosine_integral(double x, const EvalPolicy& policy = {});
/// Both integrals at once, x > 0.
SiCi sici(double x, const EvalPolicy& policy = {});

/// Entire part of the free resolvent at the origin:
/// Q(lambda; t) = -pi * (sum_{n>=1} (-(lambda t)^2)^n / (2n (2n)!) - i si(lambda t)).
std::complex<double> q_series(double lambda, double t, const EvalPolicy& policy = {});

/// Cached evaluator of volterra_N for hot loops. Piecewise Chebyshev fit of log N in
/// log t over [t_min, t_max]; falls back to direct evaluation outside. Immutable after
/// construction.
class VolterraNTable {
public:
    explicit VolterraNTable(double t_max, double t_min = 1e-300);

    double operator()(double t) const;
    // t * volterra_I(t), from the derivative of the fit.
    double scaled_kernel(double t) const;

    double t_min() const noexcept { return t_min_; }
    double t_max() const noexcept { return t_max_; }
    std::size_t segments() const noexcept { return edges_.size() - 1; }

private:
    static constexpr int degree = 16;

    double t_min_;
    double t_max_;
    std::vector<double> edges_;  // segment boundaries in x = log t
    std::vector<double> coeffs_; // (degree + 1) Chebyshev coefficients per segment
    std::vector<double> slopes_; // coefficients of d(log N)/d(log t), same layout

    std::size_t segment_of(double x) const;
};

} // namespace pnls
