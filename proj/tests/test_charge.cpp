#include "pnls/charge.hpp"
#include "pnls/errors.hpp"
#include "pnls/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pnls;

namespace {

constexpr double pi = std::numbers::pi;

InitialDatum gaussian_datum(cplx a, double b, cplx q0) {
    InitialDatum d;
    d.q0 = q0;
    d.regular = GaussianProfile{a, b};
    return d;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("solver config validation") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate(1.0));
    c.step_min = 0.0;
    CHECK_THROWS_AS(c.validate(1.0), DomainError);
    c = {};
    c.picard_tol = 1e-3;
    CHECK_THROWS_AS(c.validate(1.0), DomainError);
    c = {};
    c.blowup_threshold = 5.0;
    CHECK_THROWS_AS(c.validate(1.0), DomainError);
    CHECK_NOTHROW(c.validate(0.1));
    c = {};
    c.startup_ratio = 1.0;
    CHECK_THROWS_AS(c.validate(1.0), DomainError);

    const auto r = SolverConfig{}.refined(2);
    CHECK(r.step_init == doctest::Approx(SolverConfig{}.step_init / 4));
    CHECK(r.change_tol == doctest::Approx(SolverConfig{}.change_tol / 4));
}

TEST_CASE("solver grid") {
    SolverConfig c;
    const auto g = solver_grid(c, 1.0);
    CHECK(g[0] == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g.max_width() <= c.step_init * (1.0 + 1e-9));
    // horizon shorter than the start-up layer
    const auto s = solver_grid(c, 1e-3);
    CHECK(s.back() == 1e-3);
}

TEST_CASE("zero datum gives zero forcing and zero charge") {
    InitialDatum zero;
    const auto g = TimeGrid::uniform(1.0, 20);
    CHECK(build_forcing(zero, g).sup_norm() == 0.0);
    const auto tr = continue_until(zero, ModelParams{}, SolverConfig{}, 1.0);
    CHECK(tr.status == RunStatus::completed);
    for (const auto& q : tr.q) CHECK(q == cplx(0.0));
}

TEST_CASE("forcing starts at q0 and approaches it at a log rate") {
    InitialDatum d;
    d.q0 = 1.0;
    const VolterraNTable N(1.0);
    CHECK(forcing_value(d, 0.0, N) == cplx(1.0));
    double prev = 1e300;
    for (double t : {1e-2, 1e-4, 1e-8, 1e-16}) {
        const double gap = std::abs(forcing_value(d, t, N) - 1.0);
        CHECK(gap < prev);
        // of order N(t), not of a power of t
        CHECK(gap < 5.0 * volterra_N(t));
        CHECK(gap > 0.05 * volterra_N(t));
        prev = gap;
    }
}

TEST_CASE("forcing of a Gaussian regular part matches nested quadrature") {
    const cplx a(1.0, 0.5);
    const double b = 0.7;
    const auto d = gaussian_datum(a, b, 0.0);
    const VolterraNTable N(2.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int i = 0; i < 10; ++i) {
        const double t = u(rng);
        const cplx ref = oracle::nested_I([&](double tau) { return 4.0 * pi * oracle::gaussian_free_evolution(a, b, tau); }, t);
        CHECK(std::abs(forcing_value(d, t, N) - ref) < 1e-6);
    }
}

TEST_CASE("forcing with a singular part matches nested quadrature") {
    const auto d = gaussian_datum(1.0, 1.0, cplx(0.5, 0.5));
    const VolterraNTable N(1.0);
    for (double t : {0.1, 0.9}) {
        const cplx ref = d.q0 + oracle::nested_I(
            [&](double tau) { return oracle::forcing_integrand_oracle(1.0, 1.0, d.q0, 1.0, tau); }, t);
        CHECK(std::abs(forcing_value(d, t, N) - ref) < 1e-9);
    }
}

TEST_CASE("picard map of zero is the forcing") {
    const auto g = TimeGrid::uniform(0.5, 16);
    const auto f = build_forcing(gaussian_datum(1.0, 1.0, 1.0), g);
    const auto zero = SampledSignal::from_function(g, [](double) { return cplx(0.0); });
    CHECK(max_diff(picard_map(zero, f, ModelParams{}).values, f.values) == 0.0);
}

TEST_CASE("affine picard map contracts at a rate below |kappa| N(T)") {
    ModelParams p;
    p.beta0 = 0.0;
    p.sigma = 0.0;
    const double T = 0.25;
    const auto g = TimeGrid::uniform(T, 32);
    const auto N = table_for(g);
    const auto f = build_forcing(gaussian_datum(1.0, 1.0, 1.0), g, N);
    auto q = SampledSignal::from_function(g, [](double) { return cplx(0.0); });
    double prev = 0.0, rate = 0.0;
    for (int it = 0; it < 100 && (it == 0 || prev > 1e-13); ++it) {
        auto next = picard_map(q, f, p, N);
        const double change = max_diff(next.values, q.values);
        // ratios of round-off sized changes say nothing about the map
        if (prev > 1e-9) rate = change / prev;
        prev = change;
        q = std::move(next);
    }
    CHECK(rate > 0.0);
    CHECK(rate < std::abs(kappa) * volterra_N(T));
    CHECK(rate < 1.0);
    CHECK(prev < 1e-10);
}

TEST_CASE("scalar step solve") {
    SolverConfig cfg;
    ModelParams p;
    const double w = 0.3;
    for (cplx rhs : {cplx(0.5, 0.1), cplx(-2.0, 3.0), cplx(0.0)}) {
        const auto q = solve_local(rhs, w, p, cfg);
        REQUIRE(q.has_value());
        CHECK(std::abs(*q + w * memory_term(p, *q) - rhs) < 1e-11 * std::max(1.0, std::abs(rhs)));
    }
    ModelParams linear;
    linear.sigma = 0.0;
    const auto ql = solve_local(cplx(1.0, 1.0), w, linear, cfg);
    REQUIRE(ql.has_value());
    CHECK(std::abs(*ql * (1.0 + w * (4.0 * pi * linear.beta0 + kappa)) - cplx(1.0, 1.0)) < 1e-14);

    // focusing: large data sit past the fold of r |alpha + c r^2|
    ModelParams focusing;
    focusing.beta0 = -1.0;
    CHECK_FALSE(solve_local(cplx(3.0), 0.3, focusing, cfg).has_value());
    const auto small = solve_local(cplx(0.05), 0.3, focusing, cfg);
    REQUIRE(small.has_value());
    CHECK(std::abs(*small + 0.3 * memory_term(focusing, *small) - 0.05) < 1e-12);
}

TEST_CASE("linear charge matches the global Picard oracle on the same grid") {
    ModelParams p;
    p.sigma = 0.0;
    p.beta0 = 0.1;
    const auto d = gaussian_datum(1.0, 1.0, 1.0);
    const auto g = TimeGrid::uniform(0.5, 10);
    const auto tr = solve_charge(d, p, SolverConfig{}, g);
    std::vector<cplx> f(g.size());
    f[0] = d.q0;
    for (std::size_t n = 1; n < g.size(); ++n)
        f[n] = d.q0 + oracle::nested_I([](double tau) { return oracle::forcing_integrand_oracle(1.0, 1.0, 1.0, 1.0, tau); }, g[n]);
    const auto ref = oracle::picard_linear(f, 4.0 * pi * p.beta0 + kappa, g);
    CHECK(max_diff(tr.q, ref.q) < 1e-9);
}

TEST_CASE("returned trajectories are fixed points of the discrete map") {
    ModelParams p;
    const auto d = compatible_gaussian_datum(1.0, 1.0, p);
    const SolverConfig cfg;
    const auto tr = continue_until(d, p, cfg, 1.0);
    CHECK(tr.status == RunStatus::completed);
    CHECK(tr.q.front() == d.q0);
    CHECK(tr.fixed_point_residual <= 10.0 * cfg.picard_tol);
    const auto g = tr.grid();
    const auto f = build_forcing(d, g);
    CHECK(max_diff(picard_map(tr.signal(), f, p).values, tr.q) <= 10.0 * cfg.picard_tol * std::max(1.0, tr.sup_abs()));
}

TEST_CASE("fixed-grid refinement converges") {
    ModelParams p;
    const auto d = compatible_gaussian_datum(1.0, 1.0, p);
    std::vector<cplx> ends;
    for (int cells : {25, 50, 100, 200}) {
        const auto tr = solve_charge(d, p, SolverConfig{}, TimeGrid::uniform(1.0, cells));
        ends.push_back(tr.q.back());
    }
    for (std::size_t i = 2; i < ends.size(); ++i)
        CHECK(std::abs(ends[i - 2] - ends[i - 1]) >= 1.5 * std::abs(ends[i - 1] - ends[i]));
}

TEST_CASE("defocusing sup does not grow under refinement") {
    ModelParams p;
    const auto d = gaussian_datum(1.0, 1.0, 1.0);
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
        const auto tr = continue_until(d, p, SolverConfig{}.refined(level), 2.0);
        CHECK(tr.status == RunStatus::completed);
        if (prev > 0.0) CHECK(tr.sup_abs() <= prev * 1.02);
        prev = tr.sup_abs();
    }
}

TEST_CASE("linear runs complete for either sign of the coupling") {
    // beta0 = -1 is also global but carries a bound state oscillating at ~3.6e5 per unit time
    for (double beta0 : {-0.1, 1.0}) {
        ModelParams p;
        p.sigma = 0.0;
        p.beta0 = beta0;
        const auto tr = continue_until(gaussian_datum(1.0, 1.0, 3.0), p, SolverConfig{}, 1.0);
        CHECK(tr.status == RunStatus::completed);
        CHECK(tr.t_end() == 1.0);
    }
}

TEST_CASE("focusing fold time is stable under refinement") {
    ModelParams p;
    p.beta0 = -1.0;
    InitialDatum d;
    d.q0 = 0.2;
    std::vector<double> ends;
    for (int level = 0; level < 3; ++level) {
        const auto tr = continue_until(d, p, SolverConfig{}.refined(level), 1.0);
        REQUIRE(tr.status == RunStatus::blow_up);
        REQUIRE(tr.blowup.has_value());
        CHECK(tr.blowup->window_lo == tr.t_end());
        CHECK(tr.blowup->window_hi > tr.blowup->window_lo);
        ends.push_back(tr.blowup->window_hi);
    }
    for (double e : ends) CHECK(e == doctest::Approx(ends.back()).epsilon(1e-3));
}

TEST_CASE("strong focusing data stop at the first step") {
    ModelParams p;
    p.beta0 = -1.0;
    InitialDatum d;
    d.q0 = 3.0;
    const auto tr = continue_until(d, p, SolverConfig{}, 1.0);
    CHECK(tr.status == RunStatus::blow_up);
    REQUIRE(tr.blowup.has_value());
    CHECK(tr.blowup->window_lo <= tr.blowup->window_hi);
    CHECK(tr.q.front() == d.q0);
    for (const auto& q : tr.q) CHECK(std::isfinite(std::abs(q)));
}

TEST_CASE("experimental sigma is tagged") {
    ModelParams p;
    p.sigma = 0.25;
    p.experimental_sigma = true;
    const auto tr = continue_until(gaussian_datum(1.0, 1.0, 1.0), p, SolverConfig{}, 0.2);
    CHECK(tr.outside_theory);
    ModelParams q;
    CHECK_FALSE(continue_until(gaussian_datum(1.0, 1.0, 1.0), q, SolverConfig{}, 0.2).outside_theory);
}

TEST_CASE("inverse identity residual shrinks under refinement") {
    ModelParams p;
    const auto d = compatible_gaussian_datum(1.0, 1.0, p);
    double prev = 1e300;
    for (int level = 0; level < 3; ++level) {
        const auto tr = continue_until(d, p, SolverConfig{}.refined(level), 1.0);
        const double r = inverse_identity_residual(d, p, tr);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("invalid horizon") {
    CHECK_THROWS_AS(continue_until(InitialDatum{}, ModelParams{}, SolverConfig{}, 0.0), DomainError);
    CHECK_THROWS_AS(solver_grid(SolverConfig{}, -1.0), DomainError);
}
