#include "pnls/field.hpp"

#include "pnls/errors.hpp"
#include "pnls/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pnls {

namespace {

constexpr double pi = std::numbers::pi;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// (e^z - 1)/z and (e^z - 1 - z)/z^2
void phi_functions(cplx z, cplx& phi1, cplx& phi2) {
    if (std::abs(z) < 0.125) {
        // Taylor: phi1 = sum z^k/(k+1)!, phi2 = sum z^k/(k+2)!
        cplx term1 = 1.0, term2 = 0.5;
        phi1 = term1;
        phi2 = term2;
        for (int k = 1; k < 12; ++k) {
            term1 *= z / double(k + 1);
            term2 *= z / double(k + 2);
            phi1 += term1;
            phi2 += term2;
        }
        return;
    }
    const cplx e = std::exp(z);
    phi1 = (e - 1.0) / z;
    phi2 = (e - 1.0 - z) / (z * z);
}

} // namespace

void ModelParams::validate() const {
    if (!std::isfinite(sigma) || sigma < 0.0) throw DomainError("sigma must be nonnegative");
    if (!std::isfinite(beta0)) throw DomainError("beta0 must be finite");
    if (outside_theory() && !experimental_sigma)
        throw DomainError("sigma in (0, 1/2) requires the experimental flag");
}

cplx ModelParams::nonlinearity(cplx q) const {
    if (sigma == 0.0) return beta0 * q;
    return beta0 * std::pow(std::norm(q), sigma) * q;
}

SampledProfile SampledProfile::load_csv(const std::filesystem::path& path, double decay_exponent) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open sampled profile " + path.string());
    SampledProfile prof;
    prof.decay_exponent = decay_exponent;
    std::string line;
    std::getline(in, line);
    if (line.rfind("p,re,im", 0) != 0) throw DomainError("sampled profile: expected header p,re,im");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double p, re, im;
        if (!(ls >> p >> re >> im))
            throw DomainError("sampled profile: malformed row at line " + std::to_string(lineno));
        prof.p.push_back(p);
        prof.values.emplace_back(re, im);
    }
    return prof;
}

cplx RegularProfile::at(double p) const {
    if (const auto* g = gaussian()) return g->amplitude * std::exp(-g->width * p * p);
    const auto& s = *sampled();
    if (p <= s.p.front()) return s.values.front();
    if (p >= s.p.back()) return s.values.back() * std::pow(s.p.back() / p, s.decay_exponent);
    const auto it = std::upper_bound(s.p.begin(), s.p.end(), p);
    const std::size_t k = std::size_t(it - s.p.begin()) - 1;
    const double u = (p - s.p[k]) / (s.p[k + 1] - s.p[k]);
    return (1.0 - u) * s.values[k] + u * s.values[k + 1];
}

double RegularProfile::tail_bound(double eps) const {
    if (is_gaussian()) return 0.0;
    const auto& s = *sampled();
    const double P = s.p.back();
    const double alpha = s.decay_exponent;
    if (alpha <= 2.0 + eps) return std::numeric_limits<double>::infinity();
    return std::abs(s.values.back()) * std::pow(P, 2.0 + eps) / (alpha - 2.0 - eps);
}

void RegularProfile::validate(double eps) const {
    if (const auto* g = gaussian()) {
        if (!(g->width > 0.0) || !std::isfinite(g->width))
            throw DomainError("gaussian profile: width must be positive");
        if (!finite(g->amplitude)) throw DomainError("gaussian profile: amplitude not finite");
        return;
    }
    const auto& s = *sampled();
    if (s.p.size() < 2 || s.p.size() != s.values.size())
        throw DomainError("sampled profile: need matching p and value arrays of length >= 2");
    if (s.p.front() < 0.0) throw DomainError("sampled profile: momenta must be nonnegative");
    for (std::size_t i = 1; i < s.p.size(); ++i)
        if (!(s.p[i] > s.p[i - 1])) throw DomainError("sampled profile: momenta must increase");
    for (const auto& v : s.values)
        if (!finite(v)) throw DomainError("sampled profile: non-finite value");
    if (!(s.decay_exponent > 2.0)) throw DomainError("sampled profile: decay exponent must exceed 2");
    if (!std::isfinite(tail_bound(eps)))
        throw TailBoundError("sampled profile: decay too slow for (1 + p^eps) integrability",
                             tail_bound(eps));
}

cplx RegularProfile::center_value(double t) const {
    if (const auto* g = gaussian()) return g->amplitude / (2.0 * cplx(g->width, t));
    const auto& s = *sampled();
    static const auto rule = quad::gauss_legendre(8);
    // 1/2 int exp(-i rho t) hat(phi) d rho with panels short enough for the phase
    const double max_width = t > 0.0 ? 2.0 / t : std::numeric_limits<double>::infinity();
    cplx acc{};
    double scale = 0.0;
    auto panel = [&](double a, double b) {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (std::size_t j = 0; j < rule.x.size(); ++j) {
            const double rho = c + h * rule.x[j];
            const cplx v = at(std::sqrt(rho));
            acc += h * rule.w[j] * std::exp(cplx(0.0, -rho * t)) * v;
            scale += h * rule.w[j] * std::abs(v);
        }
    };
    double prev = 0.0;
    for (double pk : s.p) {
        const double next = pk * pk;
        if (next <= prev) continue;
        const int pieces = std::max(1, int(std::ceil((next - prev) / max_width)));
        for (int i = 0; i < pieces; ++i)
            panel(prev + (next - prev) * i / pieces, prev + (next - prev) * (i + 1) / pieces);
        prev = next;
    }
    const double tail = tail_bound(0.0);
    if (tail > 1e-6 * std::max(1.0, 0.5 * scale))
        throw TailBoundError("sampled profile: tail beyond the last momentum is not negligible", tail);
    return 0.5 * acc;
}

void InitialDatum::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
    if (!finite(q0)) throw DomainError("q0 must be finite");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    regular.validate(epsilon);
}

InitialDatum compatible_gaussian_datum(cplx q0, double width, const ModelParams& params,
                                       double lambda) {
    const double coupling = params.sigma == 0.0 ? params.beta0
                                                : params.beta0 * std::pow(std::norm(q0), params.sigma);
    const double log_term = (std::log(0.5 * std::sqrt(lambda)) + euler_gamma) / (2.0 * pi);
    InitialDatum d;
    d.lambda = lambda;
    d.q0 = q0;
    d.regular = GaussianProfile{2.0 * width * (coupling + log_term) * q0, width};
    return d;
}

cplx free_regular_at_center(const InitialDatum& datum, double t) {
    if (t < 0.0) throw DomainError("free_regular_at_center: t must be nonnegative");
    return datum.regular.center_value(t);
}

SingularSplit free_singular_split(double lambda, double t) {
    if (!(t > 0.0)) throw DomainError("free_singular_at_center: t must be positive");
    if (!(lambda > 0.0)) throw DomainError("free_singular_at_center: lambda must be positive");
    const cplx phase = std::exp(cplx(0.0, lambda * t));
    const cplx Q = q_series(lambda, t);
    return {0.5 * phase * (-euler_gamma - std::log(t)),
            0.5 * phase * (-std::log(lambda) + Q / pi)};
}

cplx free_singular_at_center(double lambda, double t) {
    return free_singular_split(lambda, t).total();
}

MomentumGrid MomentumGrid::make(double rho_max, double panel_width, int points) {
    if (!(rho_max > 0.0) || !(panel_width > 0.0) || points < 2)
        throw DomainError("MomentumGrid: invalid parameters");
    const auto rule = quad::gauss_legendre(points);
    MomentumGrid g;
    g.rho_max = rho_max;
    g.panel_width = panel_width;
    const int panels = int(std::ceil(rho_max / panel_width));
    const double w = rho_max / panels;
    g.rho.reserve(std::size_t(panels) * points);
    g.weight.reserve(std::size_t(panels) * points);
    for (int k = 0; k < panels; ++k) {
        const double c = (k + 0.5) * w;
        for (int j = 0; j < points; ++j) {
            g.rho.push_back(c + 0.5 * w * rule.x[j]);
            g.weight.push_back(0.5 * w * rule.w[j]);
        }
    }
    return g;
}

void SpectralField::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path.string());
    out << "p,re,im\n" << std::setprecision(16) << std::scientific;
    for (std::size_t i = 0; i < p.size(); ++i)
        out << p[i] << ',' << values[i].real() << ',' << values[i].imag() << '\n';
}

SpectralPropagator::SpectralPropagator(const InitialDatum& datum, const MomentumGrid& grid)
    : grid_(grid), initial_(grid.size()), duhamel_(grid.size(), cplx{}) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double rho = grid_.rho[i];
        initial_[i] = datum.regular.at(std::sqrt(rho)) + datum.q0 / (2.0 * pi * (rho + datum.lambda));
    }
}

void SpectralPropagator::advance(cplx q_left, cplx q_right, double h) {
    if (!(h > 0.0)) throw DomainError("SpectralPropagator: step must be positive");
    if (grid_.panel_width * (t_ + h) > 2.0 * pi)
        throw ResolutionError("momentum panels too wide for the phase exp(-i p^2 t) at this time");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const cplx z(0.0, -grid_.rho[i] * h);
        cplx phi1, phi2;
        phi_functions(z, phi1, phi2);
        duhamel_[i] = std::exp(z) * duhamel_[i] + h * (q_right * phi2 + q_left * (phi1 - phi2));
    }
    t_ += h;
}

SpectralField SpectralPropagator::field(cplx q_now) const {
    SpectralField f;
    f.t = t_;
    f.q_at_t = q_now;
    f.rho_max = grid_.rho_max;
    f.p.resize(grid_.size());
    f.values.resize(grid_.size());
    f.weight = grid_.weight;
    const cplx i_over_2pi(0.0, 1.0 / (2.0 * pi));
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double rho = grid_.rho[i];
        f.p[i] = std::sqrt(rho);
        f.values[i] = std::exp(cplx(0.0, -rho * t_)) * initial_[i] + i_over_2pi * duhamel_[i];
    }
    return f;
}

SpectralField reconstruct_spectral(const InitialDatum& datum, const ChargeTrajectory& traj,
                                   double t, const MomentumGrid& grid) {
    if (traj.t.empty() || !(t >= 0.0) || t > traj.t.back())
        throw DomainError("reconstruct_spectral: t outside the trajectory");
    SpectralPropagator prop(datum, grid);
    std::size_t k = 0;
    for (; k + 1 < traj.t.size() && traj.t[k + 1] <= t; ++k)
        prop.advance(traj.q[k], traj.q[k + 1], traj.t[k + 1] - traj.t[k]);
    if (traj.t[k] == t) return prop.field(traj.q[k]);
    const double u = (t - traj.t[k]) / (traj.t[k + 1] - traj.t[k]);
    const cplx q_t = (1.0 - u) * traj.q[k] + u * traj.q[k + 1];
    prop.advance(traj.q[k], q_t, t - traj.t[k]);
    return prop.field(q_t);
}

namespace {

// Geometric extrapolation of a nonnegative integrand beyond rho_max from its integrals over
// the last two octaves of the grid.
double power_tail(const SpectralField& f, const std::vector<double>& integrand, double bulk) {
    double lower = 0.0, upper = 0.0;
    for (std::size_t i = 0; i < f.p.size(); ++i) {
        const double rho = f.p[i] * f.p[i];
        if (rho >= 0.25 * f.rho_max && rho < 0.5 * f.rho_max) lower += f.weight[i] * integrand[i];
        else if (rho >= 0.5 * f.rho_max) upper += f.weight[i] * integrand[i];
    }
    if (!(upper > 0.0)) return 0.0;
    const double ratio = upper / lower;
    if (ratio < 0.5) return upper * ratio / (1.0 - ratio); // decay faster than 1/p^2
    // an oscillating floor far below the bulk is not a divergent tail
    if (upper <= 1e-6 * bulk) return upper;
    throw TailBoundError("momentum integrand decays no faster than 1/p^2", upper);
}

} // namespace

double mass(const SpectralField& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.p.size(); ++i) acc += f.weight[i] * std::norm(f.values[i]);
    // hat(psi) ~ q/(2 pi p^2) beyond the grid
    const double tail = f.rho_max > 0.0 ? std::norm(f.q_at_t) / (4.0 * pi * pi * f.rho_max) : 0.0;
    return std::sqrt(pi * (acc + tail));
}

namespace {

std::vector<cplx> regular_part_unit(const SpectralField& f) {
    std::vector<cplx> r(f.p.size());
    for (std::size_t i = 0; i < f.p.size(); ++i)
        r[i] = f.values[i] - f.q_at_t / (2.0 * pi * (f.p[i] * f.p[i] + 1.0));
    return r;
}

cplx boundary_coefficient(const ModelParams& params, cplx q) {
    return params.nonlinearity(q) + (euler_gamma - std::numbers::ln2) / (2.0 * pi) * q;
}

} // namespace

double energy(const SpectralField& f, const ModelParams& params) {
    const auto reg = regular_part_unit(f);
    std::vector<double> integrand(reg.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < reg.size(); ++i) {
        integrand[i] = (1.0 + f.p[i] * f.p[i]) * std::norm(reg[i]);
        acc += f.weight[i] * integrand[i];
    }
    const double q2 = std::norm(f.q_at_t);
    // the charge term sets the scale when the regular part is negligible
    acc += power_tail(f, integrand, acc + q2);
    const double h1 = pi * acc;
    const double coupling = params.sigma == 0.0 ? params.beta0 : params.beta0 * std::pow(q2, params.sigma);
    return h1 + (coupling / (params.sigma + 1.0) + (euler_gamma - std::numbers::ln2) / (2.0 * pi)) * q2;
}

cplx boundary_residual(const SpectralField& f, const ModelParams& params) {
    const auto reg = regular_part_unit(f);
    cplx acc{};
    for (std::size_t i = 0; i < reg.size(); ++i) acc += f.weight[i] * reg[i];
    // leading tail q/(2 pi) (1/rho - 1/(rho + 1)) of the Duhamel term; absent at t = 0
    if (f.rho_max > 0.0 && f.t > 0.0) acc += f.q_at_t / (2.0 * pi) * std::log1p(1.0 / f.rho_max);
    return 0.5 * acc - boundary_coefficient(params, f.q_at_t);
}

double h_half_seminorm(const SampledSignal& f, double nu) {
    if (!(nu > 0.0 && nu < 1.0)) throw DomainError("h_half_seminorm: nu must lie in (0,1)");
    const auto& t = f.grid.nodes();
    const auto& v = f.values;
    const std::size_t n = t.size();
    if (n < 4) throw DomainError("h_half_seminorm: at least 4 nodes required");
    static const auto far = quad::gauss_legendre(4);
    static const auto near = quad::gauss_legendre(12);
    const double expo = 0.5 + nu; // |t-s|^(1+2nu) = (d^2)^(expo)
    auto cell_value = [&](std::size_t k, double x) {
        const double u = (x - t[k]) / (t[k + 1] - t[k]);
        return (1.0 - u) * v[k] + u * v[k + 1];
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double hi = t[i + 1] - t[i];
        const cplx slope = (v[i + 1] - v[i]) / hi;
        // diagonal cell: |slope|^2 int int |x-y|^(1-2nu)
        total += std::norm(slope) * 2.0 * std::pow(hi, 3.0 - 2.0 * nu) /
                 ((2.0 - 2.0 * nu) * (3.0 - 2.0 * nu));
        for (std::size_t j = i + 1; j + 1 < n; ++j) {
            const auto& rule = (j == i + 1) ? near : far;
            const double hj = t[j + 1] - t[j];
            double pair = 0.0;
            for (std::size_t a = 0; a < rule.x.size(); ++a) {
                const double x = t[i] + 0.5 * hi * (1.0 + rule.x[a]);
                const cplx fx = cell_value(i, x);
                for (std::size_t b = 0; b < rule.x.size(); ++b) {
                    const double y = t[j] + 0.5 * hj * (1.0 + rule.x[b]);
                    const double d = y - x;
                    pair += rule.w[a] * rule.w[b] * std::norm(cell_value(j, y) - fx) /
                            std::pow(d * d, expo);
                }
            }
            total += 2.0 * 0.25 * hi * hj * pair;
        }
    }
    return total;
}

std::vector<ObservableRecord> observable_series(const InitialDatum& datum,
                                                const ModelParams& params,
                                                const ChargeTrajectory& traj,
                                                const MomentumGrid& grid) {
    std::vector<ObservableRecord> out;
    out.reserve(traj.t.size());
    SpectralPropagator prop(datum, grid);
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
        if (k > 0) prop.advance(traj.q[k - 1], traj.q[k], traj.t[k] - traj.t[k - 1]);
        const auto f = prop.field(traj.q[k]);
        out.push_back({traj.t[k], traj.q[k], mass(f), energy(f, params), boundary_residual(f, params)});
    }
    return out;
}

} // namespace pnls
