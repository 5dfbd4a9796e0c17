#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <vector>

namespace pnls::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

struct ComplexResult {
    std::complex<double> value{};
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1,1].
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod abscissae (x[1], x[3], x[5], x[7]).
inline constexpr std::array<double, 4> gauss_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
    double a, b;
    T value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T, class F>
Segment<T> kronrod15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    T fc = f(c);
    T k = fc * kronrod_w[7];
    T g = fc * gauss_w[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kronrod_x[j];
        const T s = f(c - dx) + f(c + dx);
        k += s * kronrod_w[j];
        if (j % 2 == 1) g += s * gauss_w[j / 2];
    }
    return {a, b, k * h, std::abs((k - g) * h)};
}

template <class T, class F>
void adaptive(F&& f, double a, double b, double abs_tol, double rel_tol, int max_intervals,
              int initial_panels, T& value, double& error, int& intervals, bool& converged) {
    std::priority_queue<Segment<T>> heap;
    value = T{};
    error = 0.0;
    const int panels = std::max(1, initial_panels);
    for (int i = 0; i < panels; ++i) {
        const double lo = a + (b - a) * i / panels;
        const double hi = (i + 1 == panels) ? b : a + (b - a) * (i + 1) / panels;
        auto s = kronrod15<T>(f, lo, hi);
        value += s.value;
        error += s.error;
        heap.push(s);
    }
    intervals = panels;
    while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
        if (intervals >= max_intervals) {
            converged = false;
            return;
        }
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            converged = false;
            return;
        }
        auto left = kronrod15<T>(f, worst.a, mid);
        auto right = kronrod15<T>(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
    converged = true;
}

} // namespace detail

// Globally adaptive 7/15 Gauss-Kronrod integration of a real integrand on [a, b].
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, double rel_tol,
                 int max_intervals = 2000, int initial_panels = 1) {
    Result r;
    detail::adaptive<double>(f, a, b, abs_tol, rel_tol, max_intervals, initial_panels, r.value,
                             r.error, r.intervals, r.converged);
    return r;
}

template <class F>
ComplexResult integrate_complex(F&& f, double a, double b, double abs_tol, double rel_tol,
                                int max_intervals = 2000, int initial_panels = 1) {
    ComplexResult r;
    detail::adaptive<std::complex<double>>(f, a, b, abs_tol, rel_tol, max_intervals,
                                           initial_panels, r.value, r.error, r.intervals,
                                           r.converged);
    return r;
}

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

GaussRule gauss_legendre(int n);

} // namespace pnls::quad
