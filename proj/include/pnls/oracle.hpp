#pragma once

#include "pnls/volterra_ops.hpp"

#include <complex>
#include <functional>
#include <string>

// Brute-force references built from defining integrals with Boost.Math quadrature.
// Nothing here calls into the evaluation code it is used to check.
namespace pnls::oracle {

struct OracleReport {
    std::string quantity;
    double oracle_value = 0.0;
    double main_value = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
    int budget = 0; // quadrature depth or iteration count used by the oracle

    static OracleReport compare(std::string quantity, double oracle, double main, int budget);
    static OracleReport compare(std::string quantity, cplx oracle, cplx main, int budget);
};

// int_0^inf t^(s-1)/Gamma(s) ds, split at the peak of the integrand.
double quad_defining_I(double t, int budget = 15);
// int_0^inf t^s/Gamma(s+1) ds
double quad_defining_N(double t, int budget = 15);
// int_0^inf exp(-x cosh u) du
double quad_K0(double x, int budget = 15);
// Si(x) - pi/2 and Ci(x) from int_0^x sin(u)/u du and gamma + log x + int_0^x (cos u - 1)/u du
double quad_si_shifted(double x, int budget = 15);
double quad_ci(double x, int budget = 15);

// (1/2) int_0^inf exp(-i rho t)/(rho + lambda) d rho along the rotated contour rho = -i s.
cplx quad_free_singular(double lambda, double t, int budget = 15);
// Q(lambda; t) recovered from quad_free_singular.
cplx quad_Q(double lambda, double t, int budget = 15);

// (I f)(t) = int_0^t I(t - tau) f(tau) dtau in the variable log(t - tau), with the kernel
// itself from quad_defining_I.
cplx nested_I(const std::function<cplx(double)>& f, double t, int budget = 12);

// Same implicit product rule as the charge solver, with oracle weights, iterated globally:
// q <- f - I_h[coefficient * q] until successive sweeps differ by less than tol.
struct PicardResult {
    std::vector<cplx> q;
    int iterations = 0;
    double last_change = 0.0;
    double rate = 0.0; // ratio of the last two sweep changes
};
PicardResult picard_linear(const std::vector<cplx>& f, cplx coefficient, const TimeGrid& grid,
                           double tol = 1e-13, int max_iters = 2000);

// Product-rule weights w_k = N(t_n - t_k) - N(t_n - t_{k+1}) from quad_defining_N.
std::vector<std::vector<double>> product_weights_oracle(const TimeGrid& grid);

// (U0(t) phi)(0) for hat(phi) = a exp(-b p^2): (a/2) int_0^inf exp(-(b + i t) rho) d rho.
cplx gaussian_free_evolution(cplx a, double b, double t);

// Forcing integrand from the oracle singular evolution and the Gaussian closed form.
cplx forcing_integrand_oracle(cplx a, double b, cplx q0, double lambda, double tau);

} // namespace pnls::oracle
