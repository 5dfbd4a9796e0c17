#include "pnls/specfun.hpp"

#include "pnls/errors.hpp"
#include "pnls/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace pnls {

namespace {

constexpr double pi = std::numbers::pi;

// Below this the Mellin variable is rescaled by log(1/t).
const double small_time_split = std::exp(-1.0);

double reciprocal_gamma(double x) {
    if (x <= 0.0) return 0.0;
    if (x < 1.0) return x / std::tgamma(1.0 + x);
    if (x < 170.0) return 1.0 / std::tgamma(x);
    return std::exp(-std::lgamma(x));
}

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw DomainError(std::string(name) + ": argument is not finite");
}

template <class F>
double checked_integral(F&& f, double a, double b, const EvalPolicy& policy, int panels,
                        const char* what) {
    const auto r = quad::integrate(f, a, b, 0.0, 0.1 * policy.rel_tol, policy.quad_nodes, panels);
    if (!r.converged) {
        throw ConvergenceError(std::string(what) + ": quadrature budget exhausted", r.value,
                               r.error);
    }
    return r.value;
}

// int_0^inf exp(log_integrand(s)) ds for an integrand peaked near s_peak with
// Gaussian-like decay on the right.
template <class LogF>
double mellin_integral(LogF&& log_integrand, double s_peak, const EvalPolicy& policy,
                       const char* what) {
    const double log_peak = log_integrand(s_peak);
    const double drop = 40.0 + std::log(1.0 / policy.rel_tol);
    double step = 4.0 + std::sqrt(std::max(s_peak, 1.0));
    double upper = s_peak + step;
    while (log_integrand(upper) > log_peak - drop) {
        step *= 1.5;
        upper += step;
    }
    auto f = [&](double s) { return std::exp(log_integrand(s) - log_peak); };
    double value = 0.0;
    if (s_peak > 0.0) value += checked_integral(f, 0.0, s_peak, policy, 4, what);
    value += checked_integral(f, s_peak, upper, policy, 8, what);
    return value * std::exp(log_peak);
}

double log_t_pow_over_gamma(double s, double log_t, double shift) {
    // log( t^(s+shift) / Gamma(s+shift+1) ) with shift = -1 for I and 0 for N
    const double a = s + shift + 1.0;
    if (a <= 0.0) return -std::numeric_limits<double>::infinity();
    if (a < 1.0) return (s + shift) * log_t + std::log(reciprocal_gamma(a));
    return (s + shift) * log_t - std::lgamma(a);
}

} // namespace

void EvalPolicy::validate() const {
    if (!(rel_tol > 0.0 && rel_tol <= 1e-3))
        throw DomainError("EvalPolicy: rel_tol must lie in (0, 1e-3]");
    if (series_cutoff < 16) throw DomainError("EvalPolicy: series_cutoff must be >= 16");
    if (quad_nodes < 32) throw DomainError("EvalPolicy: quad_nodes must be >= 32");
}

double volterra_I(double t, const EvalPolicy& policy) {
    policy.validate();
    require_finite(t, "volterra_I");
    if (t <= 0.0) throw DomainError("volterra_I: t must be positive");
    if (t < small_time_split) {
        const double L = -std::log(t);
        const double upper = std::log(L / policy.rel_tol) + 12.0;
        auto f = [L](double u) { return std::exp(-u) * reciprocal_gamma(u / L); };
        const double v = checked_integral(f, 0.0, upper, policy, 4, "volterra_I");
        return v / (t * L);
    }
    const double log_t = std::log(t);
    auto lf = [log_t](double s) { return log_t_pow_over_gamma(s, log_t, -1.0); };
    return mellin_integral(lf, t > 1.0 ? t + 0.5 : 1.0, policy, "volterra_I");
}

double volterra_N(double t, const EvalPolicy& policy) {
    policy.validate();
    require_finite(t, "volterra_N");
    if (t < 0.0) throw DomainError("volterra_N: t must be nonnegative");
    if (t == 0.0) return 0.0;
    if (t < small_time_split) {
        const double L = -std::log(t);
        const double upper = std::log(1.0 / policy.rel_tol) + 12.0;
        auto f = [L](double u) { return std::exp(-u) * reciprocal_gamma(1.0 + u / L); };
        return checked_integral(f, 0.0, upper, policy, 4, "volterra_N") / L;
    }
    const double log_t = std::log(t);
    auto lf = [log_t](double s) { return log_t_pow_over_gamma(s, log_t, 0.0); };
    return mellin_integral(lf, t > 1.0 ? t - 0.5 : 0.5, policy, "volterra_N");
}

double macdonald_K0(double x, const EvalPolicy& policy) {
    policy.validate();
    require_finite(x, "macdonald_K0");
    if (x <= 0.0) throw DomainError("macdonald_K0: x must be positive");
    const double eps = 0.1 * policy.rel_tol;
    if (x <= 2.0) {
        const double y = 0.25 * x * x;
        double term = 1.0, i0 = 1.0, harmonic = 0.0, tail = 0.0;
        for (int k = 1;; ++k) {
            if (k > policy.series_cutoff)
                throw ConvergenceError("macdonald_K0: series budget exhausted", i0, term);
            term *= y / (double(k) * k);
            harmonic += 1.0 / k;
            i0 += term;
            tail += term * harmonic;
            if (term * (1.0 + harmonic) < eps * 1e-2) break;
        }
        return -(std::log(0.5 * x) + euler_gamma) * i0 + tail;
    }
    // Steed's continued fraction for the ratio K1/K0 and the normalising sum.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1;; ++i) {
        if (i > policy.series_cutoff)
            throw ConvergenceError("macdonald_K0: continued fraction budget exhausted", s, delh);
        a -= 2.0 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps * 1e-2) break;
    }
    return std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
}

namespace {

SiCi sici_impl(double x, const EvalPolicy& policy) {
    const double eps = 1e-3 * policy.rel_tol;
    if (x <= 2.0) {
        // power series
        double si_sum = 0.0, ci_sum = 0.0;
        double fact = 1.0, power = 1.0;
        bool done_si = false, done_ci = false;
        for (int m = 1;; ++m) {
            if (m > policy.series_cutoff)
                throw ConvergenceError("sici: series budget exhausted", si_sum, std::abs(power));
            power *= x;
            fact /= m;
            const double term = ((m / 2) % 2 == 0 ? 1.0 : -1.0) * power * fact / m;
            if (m % 2 == 1) {
                si_sum += term;
                done_si = std::abs(term) < eps * std::abs(si_sum) + 1e-300;
            } else {
                ci_sum += term;
                done_ci = std::abs(term) < eps * std::abs(ci_sum) + 1e-300;
            }
            if (done_si && done_ci && m > 2) break;
        }
        return {si_sum - 0.5 * pi, euler_gamma + std::log(x) + ci_sum};
    }
    // Lentz continued fraction for E1(ix)
    using cplx = std::complex<double>;
    const double tiny = 1e-300;
    cplx b(1.0, x);
    cplx c(1.0 / tiny, 0.0);
    cplx d = 1.0 / b;
    cplx h = d;
    for (int i = 2;; ++i) {
        if (i > 4 * policy.series_cutoff)
            throw ConvergenceError("sici: continued fraction budget exhausted", h.real(), 1.0);
        const double a = -double(i - 1) * (i - 1);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const cplx del = c * d;
        h *= del;
        if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < eps) break;
    }
    h *= cplx(std::cos(x), -std::sin(x));
    return {h.imag(), -h.real()};
}

} // namespace

double sine_integral_shifted(double x, const EvalPolicy& policy) {
    policy.validate();
    require_finite(x, "sine_integral_shifted");
    if (x < 0.0) throw DomainError("si: x must be nonnegative");
    if (x == 0.0) return -0.5 * pi;
    return sici_impl(x, policy).si;
}

double cosine_integral(double x, const EvalPolicy& policy) {
    return sici(x, policy).ci;
}

SiCi sici(double x, const EvalPolicy& policy) {
    policy.validate();
    require_finite(x, "sici");
    if (x <= 0.0) throw DomainError("ci: x must be positive");
    return sici_impl(x, policy);
}

std::complex<double> q_series(double lambda, double t, const EvalPolicy& policy) {
    policy.validate();
    require_finite(lambda, "q_series");
    require_finite(t, "q_series");
    if (lambda < 0.0) throw DomainError("q_series: lambda must be nonnegative");
    if (t < 0.0) throw DomainError("q_series: t must be nonnegative");
    const double z = lambda * t;
    if (z == 0.0) return {0.0, -0.5 * pi * pi};
    double even_sum;
    double si;
    if (z <= 4.0) {
        const double z2 = z * z;
        double term = 1.0; // (-z^2)^n / (2n)!
        even_sum = 0.0;
        for (int n = 1;; ++n) {
            if (n > policy.series_cutoff)
                throw ConvergenceError("q_series: series budget exhausted", even_sum, term);
            term *= -z2 / ((2.0 * n - 1.0) * (2.0 * n));
            const double contrib = term / (2.0 * n);
            even_sum += contrib;
            if (std::abs(contrib) < 1e-3 * policy.rel_tol * std::max(std::abs(even_sum), 1e-300))
                break;
        }
        si = sine_integral_shifted(z, policy);
    } else {
        const auto sc = sici(z, policy);
        even_sum = sc.ci - euler_gamma - std::log(z);
        si = sc.si;
    }
    return {-pi * even_sum, pi * si};
}

VolterraNTable::VolterraNTable(double t_max, double t_min) : t_min_(t_min), t_max_(t_max) {
    if (!(t_min > 0.0) || !(t_max > t_min))
        throw DomainError("VolterraNTable: need 0 < t_min < t_max");
    const double x_lo = std::log(t_min);
    const double x_hi = std::log(t_max);
    const double pivot = std::clamp(-2.0, x_lo, x_hi);

    std::vector<double> left{pivot};
    while (left.back() > x_lo) {
        const double x = left.back();
        left.push_back(std::max(x_lo, x - std::max(0.25, 0.12 * std::abs(x))));
    }
    edges_.assign(left.rbegin(), left.rend());
    while (edges_.back() < x_hi) edges_.push_back(std::min(x_hi, edges_.back() + 0.25));
    if (edges_.size() < 2) edges_.push_back(x_hi);

    const EvalPolicy tight{1e-13, 400, 4000};
    constexpr int n = degree + 1;
    coeffs_.assign((edges_.size() - 1) * n, 0.0);
    std::vector<double> samples(n);
    for (std::size_t seg = 0; seg + 1 < edges_.size(); ++seg) {
        const double a = edges_[seg], b = edges_[seg + 1];
        for (int j = 0; j < n; ++j) {
            const double u = std::cos(pi * (j + 0.5) / n);
            samples[j] = std::log(volterra_N(std::exp(0.5 * (a + b) + 0.5 * (b - a) * u), tight));
        }
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += samples[j] * std::cos(pi * k * (j + 0.5) / n);
            coeffs_[seg * n + k] = (k == 0 ? 1.0 : 2.0) * acc / n;
        }
        // derivative series: d_{k-1} = d_{k+1} + 2k c_k, scaled to x
        const double* c = &coeffs_[seg * n];
        std::vector<double> d(n + 1, 0.0);
        for (int k = n - 1; k >= 1; --k) d[k - 1] = d[k + 1] + 2.0 * k * c[k];
        d[0] *= 0.5;
        for (int k = 0; k < n; ++k) slopes_.push_back(d[k] * 2.0 / (b - a));
    }
}

std::size_t VolterraNTable::segment_of(double x) const {
    auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    std::size_t seg = it == edges_.begin() ? 0 : std::size_t(it - edges_.begin()) - 1;
    return std::min(seg, edges_.size() - 2);
}

namespace {

double clenshaw(const double* c, int degree, double u) {
    double b1 = 0.0, b2 = 0.0;
    for (int k = degree; k >= 1; --k) {
        const double tmp = 2.0 * u * b1 - b2 + c[k];
        b2 = b1;
        b1 = tmp;
    }
    return u * b1 - b2 + c[0];
}

} // namespace

double VolterraNTable::scaled_kernel(double t) const {
    if (!(t > 0.0)) throw DomainError("VolterraNTable::scaled_kernel: t must be positive");
    if (t < t_min_ || t > t_max_) return t * volterra_I(t, EvalPolicy{1e-13, 400, 4000});
    const double x = std::log(t);
    const std::size_t seg = segment_of(x);
    const double a = edges_[seg], b = edges_[seg + 1];
    const double u = (2.0 * x - a - b) / (b - a);
    const double log_n = clenshaw(&coeffs_[seg * (degree + 1)], degree, u);
    return std::exp(log_n) * clenshaw(&slopes_[seg * (degree + 1)], degree, u);
}

double VolterraNTable::operator()(double t) const {
    if (t == 0.0) return 0.0;
    if (t < t_min_ || t > t_max_) return volterra_N(t, EvalPolicy{1e-13, 400, 4000});
    const double x = std::log(t);
    const std::size_t seg = segment_of(x);
    const double a = edges_[seg], b = edges_[seg + 1];
    const double u = (2.0 * x - a - b) / (b - a);
    return std::exp(clenshaw(&coeffs_[seg * (degree + 1)], degree, u));
}

} // namespace pnls
