#include "pnls/charge.hpp"
#include "pnls/errors.hpp"
#include "pnls/field.hpp"
#include "pnls/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

using namespace pnls;

namespace {

constexpr double pi = std::numbers::pi;

InitialDatum gaussian_datum(cplx a, double b, cplx q0 = 0.0) {
    InitialDatum d;
    d.q0 = q0;
    d.regular = GaussianProfile{a, b};
    return d;
}

ChargeTrajectory constant_charge(cplx c, double T, int cells) {
    ChargeTrajectory tr;
    for (int i = 0; i <= cells; ++i) {
        tr.t.push_back(T * i / cells);
        tr.q.push_back(c);
    }
    return tr;
}

} // namespace

TEST_CASE("datum validation") {
    InitialDatum d;
    d.lambda = 0.0;
    CHECK_THROWS_AS(d.validate(), DomainError);
    d = gaussian_datum(1.0, -1.0);
    CHECK_THROWS_AS(d.validate(), DomainError);
    d = gaussian_datum(1.0, 1.0);
    d.epsilon = 0.0;
    CHECK_THROWS_AS(d.validate(), DomainError);

    ModelParams p;
    p.sigma = 0.3;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p.experimental_sigma = true;
    CHECK_NOTHROW(p.validate());
    CHECK(p.outside_theory());
    p.sigma = -1.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("free regular evolution of a Gaussian") {
    const cplx a(1.5, -0.5);
    const double b = 0.8;
    const auto d = gaussian_datum(a, b);
    CHECK(std::abs(free_regular_at_center(d, 0.0) - a / (2.0 * b)) < 1e-15);
    for (double t : {0.1, 1.0, 7.0}) {
        const cplx v = free_regular_at_center(d, t);
        CHECK(std::abs(v - oracle::gaussian_free_evolution(a, b, t)) < 1e-14);
        CHECK(std::abs(v) == doctest::Approx(std::abs(a) / (2.0 * std::sqrt(b * b + t * t))).epsilon(1e-13));
    }
    InitialDatum zero;
    CHECK(free_regular_at_center(zero, 2.0) == cplx(0.0));
}

TEST_CASE("sampled profile reproduces the Gaussian center value") {
    SampledProfile s;
    s.decay_exponent = 4.0;
    const double b = 1.0;
    for (int i = 0; i <= 4000; ++i) {
        const double p = 8.0 * i / 4000;
        s.p.push_back(p);
        s.values.push_back(std::exp(-b * p * p));
    }
    const RegularProfile prof(s);
    CHECK_NOTHROW(prof.validate(0.5));
    for (double t : {0.0, 0.5, 2.0}) {
        const cplx ref = oracle::gaussian_free_evolution(1.0, b, t);
        CHECK(std::abs(prof.center_value(t) - ref) < 1e-5);
    }
}

TEST_CASE("sampled profile tail checks") {
    SampledProfile s;
    s.p = {0.0, 1.0, 2.0};
    s.values = {1.0, 1.0, 1.0};
    s.decay_exponent = 2.2;
    const RegularProfile slow(s);
    CHECK_THROWS_AS(slow.validate(0.5), TailBoundError);
    s.decay_exponent = 1.5;
    CHECK_THROWS_AS(RegularProfile(s).validate(0.5), DomainError);
    s.decay_exponent = 4.0;
    // heavy mass at the last node: the continued tail is not negligible
    CHECK_THROWS_AS(RegularProfile(s).center_value(1.0), TailBoundError);
}

TEST_CASE("singular evolution against the contour oracle") {
    for (double t : {1e-4, 0.3, 2.0, 9.0}) {
        const cplx v = free_singular_at_center(1.0, t);
        CHECK(std::abs(v - oracle::quad_free_singular(1.0, t)) < 1e-10);
        const auto split = free_singular_split(1.0, t);
        CHECK(std::abs(split.total() - v) < 1e-14);
    }
    CHECK(std::abs(free_singular_at_center(2.5, 0.7) - oracle::quad_free_singular(2.5, 0.7)) < 1e-10);
    // value + log(t)/2 stays bounded as t -> 0
    for (double t = 1e-2; t > 1e-12; t *= 1e-2) CHECK(std::abs(free_singular_at_center(1.0, t) + 0.5 * std::log(t)) < 2.0);
    CHECK_THROWS_AS(free_singular_at_center(1.0, 0.0), DomainError);
}

TEST_CASE("Gaussian mass and energy closed forms") {
    const cplx a(0.7, 0.2);
    const double b = 1.3;
    const auto d = gaussian_datum(a, b);
    const auto grid = MomentumGrid::make(2000.0, 1.0, 8);
    ModelParams params;
    const auto tr = constant_charge(0.0, 1.0, 10);
    for (double t : {0.0, 0.5, 1.0}) {
        const auto f = reconstruct_spectral(d, tr, t, grid);
        CHECK(mass(f) == doctest::Approx(std::abs(a) * std::sqrt(pi / (2.0 * b))).epsilon(1e-12));
        const double h1 = pi * std::norm(a) * (1.0 / (2.0 * b) + 1.0 / (4.0 * b * b));
        CHECK(energy(f, params) == doctest::Approx(h1).epsilon(1e-12));
    }
    SpectralField empty;
    CHECK(mass(empty) == 0.0);
}

TEST_CASE("charge term of the energy") {
    InitialDatum d;
    d.q0 = 1.0;
    const auto grid = MomentumGrid::make(500.0, 1.0, 8);
    const auto f = reconstruct_spectral(d, constant_charge(1.0, 0.5, 5), 0.0, grid);
    ModelParams linear;
    linear.beta0 = 0.0;
    const double log_coeff = (euler_gamma - std::numbers::ln2) / (2.0 * pi);
    CHECK(energy(f, linear) == doctest::Approx(log_coeff).epsilon(1e-12));
    ModelParams cubic;
    CHECK(energy(f, cubic) == doctest::Approx(0.5 + log_coeff).epsilon(1e-12));
}

TEST_CASE("reconstruction with a constant charge has a closed form") {
    const cplx c(0.4, -0.3);
    const auto d = gaussian_datum(1.0, 1.0, c);
    const auto grid = MomentumGrid::make(200.0, 1.0, 8);
    const double t = 0.8;
    const auto f = reconstruct_spectral(d, constant_charge(c, 1.0, 10), t, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.p.size(); ++i) {
        const double rho = f.p[i] * f.p[i];
        const cplx phase = std::exp(cplx(0.0, -rho * t));
        const cplx psi0 = std::exp(-rho) + c / (2.0 * pi * (rho + 1.0));
        const cplx duhamel = cplx(0.0, 1.0 / (2.0 * pi)) * c * (1.0 - phase) / cplx(0.0, rho);
        worst = std::max(worst, std::abs(f.values[i] - (phase * psi0 + duhamel)));
    }
    CHECK(worst < 1e-10);
    CHECK(f.q_at_t == c);
}

TEST_CASE("zero charge evolves freely") {
    const auto d = gaussian_datum(1.0, 0.5);
    const auto grid = MomentumGrid::make(100.0, 1.0, 8);
    const auto f0 = reconstruct_spectral(d, constant_charge(0.0, 2.0, 4), 0.0, grid);
    const auto f1 = reconstruct_spectral(d, constant_charge(0.0, 2.0, 4), 1.3, grid);
    for (std::size_t i = 0; i < f0.p.size(); ++i) {
        const double rho = f0.p[i] * f0.p[i];
        CHECK(std::abs(f0.values[i] - std::exp(-0.5 * rho)) < 1e-15);
        CHECK(std::abs(f1.values[i] - std::exp(cplx(0.0, -rho * 1.3)) * std::exp(-0.5 * rho)) < 1e-14);
    }
}

TEST_CASE("momentum panels must resolve the phase") {
    const auto d = gaussian_datum(1.0, 1.0);
    const auto grid = MomentumGrid::make(100.0, 1.0, 8);
    CHECK_THROWS_AS(reconstruct_spectral(d, constant_charge(0.0, 8.0, 8), 7.0, grid), ResolutionError);
    CHECK_THROWS_AS(reconstruct_spectral(d, constant_charge(0.0, 1.0, 2), 1.5, grid), DomainError);
}

TEST_CASE("energy rejects a divergent H1 tail") {
    const auto grid = MomentumGrid::make(1000.0, 1.0, 8);
    SpectralField f;
    f.rho_max = grid.rho_max;
    f.weight = grid.weight;
    for (double rho : grid.rho) {
        f.p.push_back(std::sqrt(rho));
        f.values.push_back(std::pow(rho, -0.6));
    }
    CHECK_THROWS_AS(energy(f, ModelParams{}), TailBoundError);
}

TEST_CASE("compatible datum satisfies the boundary condition at t = 0") {
    ModelParams params;
    for (double q0 : {0.5, 1.0, 2.0}) {
        const auto d = compatible_gaussian_datum(q0, 1.0, params);
        const auto grid = MomentumGrid::make(2000.0, 1.0, 8);
        const auto f = reconstruct_spectral(d, constant_charge(q0, 1.0, 2), 0.0, grid);
        CHECK(std::abs(boundary_residual(f, params)) < 1e-10);
    }
}

TEST_CASE("boundary residual detects a perturbed charge") {
    ModelParams params;
    const auto d = compatible_gaussian_datum(1.0, 1.0, params);
    auto tr = continue_until(d, params, SolverConfig{}, 1.0);
    const auto grid = MomentumGrid::make(2000.0, 1.0, 8);
    const std::size_t k = tr.t.size() / 2;
    const double clean = std::abs(boundary_residual(reconstruct_spectral(d, tr, tr.t[k], grid), params));
    tr.q[k] *= 1.1;
    const double bad = std::abs(boundary_residual(reconstruct_spectral(d, tr, tr.t[k], grid), params));
    CHECK(clean < 1e-2);
    CHECK(bad > 0.05);
    CHECK(bad > 10.0 * clean);
}

TEST_CASE("linear boundary condition on a sigma = 0 run") {
    ModelParams params;
    params.sigma = 0.0;
    params.beta0 = 0.5;
    const auto d = compatible_gaussian_datum(1.0, 1.0, params);
    const auto tr = continue_until(d, params, SolverConfig{}, 1.0);
    const auto obs = observable_series(d, params, tr, MomentumGrid::make(2000.0, 1.0, 8));
    double worst = 0.0;
    for (const auto& o : obs) worst = std::max(worst, std::abs(o.residual));
    CHECK(worst < 1e-2);
}

TEST_CASE("H^1/2 seminorm") {
    const auto g = TimeGrid::uniform(1.0, 64);
    const auto c = SampledSignal::from_function(g, [](double) { return cplx(2.0, 1.0); });
    CHECK(h_half_seminorm(c) == 0.0);
    for (int cells : {8, 32, 128}) {
        const auto gt = TimeGrid::uniform(1.0, cells);
        CHECK(h_half_seminorm(SampledSignal::from_function(gt, [](double t) { return cplx(t); })) ==
              doctest::Approx(1.0).epsilon(0.05));
    }
    auto wave = [](double t) { return std::exp(cplx(0.0, 3.0 * t)) + t * t; };
    const double base = h_half_seminorm(SampledSignal::from_function(g, wave));
    CHECK(h_half_seminorm(SampledSignal::from_function(g, [&](double t) { return 2.0 * wave(t); })) ==
          doctest::Approx(4.0 * base).epsilon(1e-12));
    const auto offset = SampledSignal::from_function(g, [&](double t) { return wave(t) + cplx(5.0, -2.0); });
    CHECK(h_half_seminorm(offset) == doctest::Approx(base).epsilon(1e-12));
    const auto reversed = SampledSignal::from_function(g, [&](double t) { return wave(1.0 - t); });
    CHECK(h_half_seminorm(reversed) == doctest::Approx(base).epsilon(1e-12));
    const auto small = TimeGrid::uniform(1.0, 2);
    CHECK_THROWS_AS(h_half_seminorm(SampledSignal::from_function(small, [](double t) { return cplx(t); })), DomainError);
    CHECK_THROWS_AS(h_half_seminorm(c, 1.0), DomainError);
}

TEST_CASE("nonlinearity is locally Lipschitz with a scale-free constant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::pair<cplx, cplx>> pairs;
    while (pairs.size() < 2000) {
        const cplx f(u(rng), u(rng)), g(u(rng), u(rng));
        if (std::abs(f) <= 1.0 && std::abs(g) <= 1.0 && f != g) pairs.emplace_back(f, g);
    }
    for (double sigma : {0.5, 1.0, 2.0}) {
        ModelParams p;
        p.sigma = sigma;
        std::vector<double> constants;
        for (double M : {0.5, 1.0, 2.0}) {
            double C = 0.0;
            for (const auto& [f, g] : pairs)
                C = std::max(C, std::abs(p.nonlinearity(M * f) - p.nonlinearity(M * g)) /
                                    (std::pow(M, 2.0 * sigma) * std::abs(M * f - M * g)));
            constants.push_back(C);
            CHECK(C <= 2.0 * sigma + 1.0 + 1e-12);
        }
        CHECK(constants[0] == doctest::Approx(constants[1]).epsilon(1e-9));
        CHECK(constants[2] == doctest::Approx(constants[1]).epsilon(1e-9));
    }
}

TEST_CASE("snapshot CSV") {
    const auto d = gaussian_datum(1.0, 1.0);
    const auto f = reconstruct_spectral(d, constant_charge(0.0, 1.0, 2), 0.5, MomentumGrid::make(4.0, 1.0, 2));
    const auto path = std::filesystem::temp_directory_path() / "pnls_snapshot_test.csv";
    f.write_csv(path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "p,re,im");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == int(f.p.size()));
    std::filesystem::remove(path);
}
