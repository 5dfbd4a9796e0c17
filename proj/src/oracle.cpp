#include "pnls/oracle.hpp"

#include "pnls/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace pnls::oracle {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double pi = std::numbers::pi;
constexpr double gamma_e = 0.57721566490153286060651209008240243;
constexpr double quad_tol = 1e-14;
constexpr double nested_tol = 1e-11;

// Boost's error estimate has an absolute floor that small panels never get under, so
// convergence is judged by agreement between successive depths instead.
template <unsigned Points = 61, class F>
double gk(F f, double a, double b, int budget, double tol = quad_tol) {
    double prev = gauss_kronrod<double, Points>::integrate(f, a, b, 0, tol);
    for (int depth = 2; depth <= budget; depth += 2) {
        const double next = gauss_kronrod<double, Points>::integrate(f, a, b, unsigned(depth), tol);
        if (std::abs(next - prev) <= tol * std::abs(next)) return next;
        prev = next;
    }
    return prev;
}

// Root of digamma(s) = y on (0, inf); digamma is increasing there.
double inverse_digamma(double y) {
    double lo = 1e-300, hi = 2.0;
    while (boost::math::digamma(hi) < y) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = lo < 1e-8 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        (boost::math::digamma(mid) < y ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

// Integrates exp(log_f(s)) over (0, inf): peak at s_peak, upper cut where the log drops by 60.
template <class LogF>
double peaked_integral(LogF log_f, double s_peak, int budget) {
    auto f = [&](double s) { return s <= 0.0 ? 0.0 : std::exp(log_f(s)); };
    const double top = log_f(std::max(s_peak, 1e-300));
    double width = 1.0;
    while (log_f(s_peak + width) > top - 60.0) width *= 2.0;
    double acc = 0.0;
    if (s_peak > 0.0) acc += gk(f, 0.0, s_peak, budget);
    acc += gk(f, s_peak, s_peak + width, budget);
    return acc;
}

} // namespace

OracleReport OracleReport::compare(std::string quantity, double oracle, double main, int budget) {
    OracleReport r;
    r.quantity = std::move(quantity);
    r.oracle_value = oracle;
    r.main_value = main;
    r.abs_error = std::abs(main - oracle);
    r.rel_error = oracle != 0.0 ? r.abs_error / std::abs(oracle) : r.abs_error;
    r.budget = budget;
    return r;
}

OracleReport OracleReport::compare(std::string quantity, cplx oracle, cplx main, int budget) {
    OracleReport r;
    r.quantity = std::move(quantity);
    r.oracle_value = std::abs(oracle);
    r.main_value = std::abs(main);
    r.abs_error = std::abs(main - oracle);
    r.rel_error = std::abs(oracle) != 0.0 ? r.abs_error / std::abs(oracle) : r.abs_error;
    r.budget = budget;
    return r;
}

double quad_defining_I(double t, int budget) {
    if (!(t > 0.0)) throw DomainError("quad_defining_I: t must be positive");
    const double L = std::log(t);
    auto log_f = [L](double s) { return (s - 1.0) * L - boost::math::lgamma(s); };
    return peaked_integral(log_f, inverse_digamma(L), budget);
}

double quad_defining_N(double t, int budget) {
    if (!(t > 0.0)) throw DomainError("quad_defining_N: t must be positive");
    const double L = std::log(t);
    auto log_f = [L](double s) { return s * L - boost::math::lgamma(s + 1.0); };
    const double s_peak = L > -gamma_e ? inverse_digamma(L) - 1.0 : 0.0;
    return peaked_integral(log_f, std::max(s_peak, 0.0), budget);
}

double quad_K0(double x, int budget) {
    if (!(x > 0.0)) throw DomainError("quad_K0: x must be positive");
    const double upper = std::acosh(std::max(1.0, 750.0 / x));
    return gk([x](double u) { return std::exp(-x * std::cosh(u)); }, 0.0, upper, budget);
}

double quad_si_shifted(double x, int budget) {
    if (x < 0.0) throw DomainError("quad_si_shifted: x must be nonnegative");
    auto f = [](double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; };
    double acc = 0.0;
    // one panel per half period keeps every panel non-oscillatory
    for (double a = 0.0; a < x; a += pi) acc += gk(f, a, std::min(a + pi, x), budget);
    return acc - 0.5 * pi;
}

double quad_ci(double x, int budget) {
    if (!(x > 0.0)) throw DomainError("quad_ci: x must be positive");
    auto f = [](double u) { return u == 0.0 ? 0.0 : (std::cos(u) - 1.0) / u; };
    double acc = 0.0;
    for (double a = 0.0; a < x; a += pi) acc += gk(f, a, std::min(a + pi, x), budget);
    return gamma_e + std::log(x) + acc;
}

cplx quad_free_singular(double lambda, double t, int budget) {
    if (!(lambda > 0.0) || !(t > 0.0)) throw DomainError("quad_free_singular: need lambda, t > 0");
    // with u = s t: (1/2)(-i) int_0^inf exp(-u)/(c - i u) du, c = lambda t,
    // and 1/(c - i u) = (c + i u)/(c^2 + u^2)
    const double c = lambda * t;
    auto re = [=](double u) { return std::exp(-u) * c / (c * c + u * u); };
    auto im = [=](double u) { return std::exp(-u) * u / (c * c + u * u); };
    std::vector<double> cuts{0.0};
    for (double x = 1e-3 * c; x < 1.0; x *= 10.0) cuts.push_back(x);
    for (double x = 1.0; x < 750.0; x *= 2.0) cuts.push_back(x);
    cuts.push_back(750.0);
    std::sort(cuts.begin(), cuts.end());
    double a_re = 0.0, a_im = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        a_re += gk(re, cuts[i], cuts[i + 1], budget);
        a_im += gk(im, cuts[i], cuts[i + 1], budget);
    }
    return 0.5 * cplx(a_im, -a_re);
}

cplx quad_Q(double lambda, double t, int budget) {
    const cplx fs = quad_free_singular(lambda, t, budget);
    return pi * (2.0 * std::exp(cplx(0.0, -lambda * t)) * fs + gamma_e + std::log(lambda * t));
}

cplx nested_I(const std::function<cplx(double)>& f, double t, int budget) {
    if (!(t > 0.0)) throw DomainError("nested_I: t must be positive");
    const double s_min = 1e-20 * t;
    const cplx head = f(t) * quad_defining_N(s_min);
    // panels of unit width in u = log(t - tau); kernel and integrand shared between parts
    auto integrand = [&](double u) {
        const double s = std::exp(u);
        return quad_defining_I(s) * s * f(t - s);
    };
    const double a = std::log(s_min), b = std::log(t);
    const int panels = int(std::ceil(b - a));
    cplx acc = head;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + (b - a) * i / panels, hi = a + (b - a) * (i + 1) / panels;
        std::map<double, cplx> cache;
        auto value = [&](double u) {
            auto it = cache.find(u);
            if (it != cache.end()) return it->second;
            return cache.emplace(u, integrand(u)).first->second;
        };
        acc += cplx(gk<31>([&](double u) { return value(u).real(); }, lo, hi, budget, nested_tol),
                    gk<31>([&](double u) { return value(u).imag(); }, lo, hi, budget, nested_tol));
    }
    return acc;
}

std::vector<std::vector<double>> product_weights_oracle(const TimeGrid& grid) {
    std::map<double, double> cache;
    auto N = [&](double s) {
        if (s <= 0.0) return 0.0;
        auto it = cache.find(s);
        if (it != cache.end()) return it->second;
        const double v = quad_defining_N(s);
        cache.emplace(s, v);
        return v;
    };
    std::vector<std::vector<double>> w(grid.size());
    for (std::size_t n = 1; n < grid.size(); ++n) {
        w[n].resize(n);
        for (std::size_t k = 0; k < n; ++k) w[n][k] = N(grid[n] - grid[k]) - N(grid[n] - grid[k + 1]);
    }
    return w;
}

PicardResult picard_linear(const std::vector<cplx>& f, cplx coefficient, const TimeGrid& grid,
                           double tol, int max_iters) {
    if (f.size() != grid.size()) throw DomainError("picard_linear: forcing length does not match grid");
    const auto w = product_weights_oracle(grid);
    PicardResult res;
    res.q.assign(f.size(), cplx{});
    double prev_change = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        std::vector<cplx> next(f.size());
        next[0] = f[0];
        for (std::size_t n = 1; n < f.size(); ++n) {
            cplx acc{};
            for (std::size_t k = 0; k + 1 < n; ++k) acc += w[n][k] * 0.5 * (res.q[k] + res.q[k + 1]);
            acc += w[n][n - 1] * res.q[n];
            next[n] = f[n] - coefficient * acc;
        }
        double change = 0.0;
        for (std::size_t n = 0; n < f.size(); ++n) change = std::max(change, std::abs(next[n] - res.q[n]));
        res.q = std::move(next);
        res.iterations = it;
        res.last_change = change;
        res.rate = prev_change > 0.0 ? change / prev_change : 0.0;
        prev_change = change;
        if (change <= tol) return res;
    }
    throw ConvergenceError("picard_linear: iteration budget exhausted", 0.0, res.last_change);
}

cplx gaussian_free_evolution(cplx a, double b, double t) {
    if (!(b > 0.0)) throw DomainError("gaussian_free_evolution: width must be positive");
    return 0.5 * a / cplx(b, t);
}

cplx forcing_integrand_oracle(cplx a, double b, cplx q0, double lambda, double tau) {
    const cplx regular = 4.0 * pi * gaussian_free_evolution(a, b, tau);
    // E1(iz) = -gamma - log z - i pi/2 + O(z) gives the tau -> 0 limit
    const cplx singular = tau > 0.0
                              ? 2.0 * quad_free_singular(lambda, tau) - (-gamma_e - std::log(tau))
                              : cplx(-std::log(lambda), -0.5 * pi);
    return regular + q0 * singular;
}

} // namespace pnls::oracle
