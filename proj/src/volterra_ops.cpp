#include "pnls/volterra_ops.hpp"

#include "pnls/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pnls {

TimeGrid::TimeGrid(std::vector<double> nodes, Grading grading, double ratio)
    : nodes_(std::move(nodes)), grading_(grading), ratio_(ratio) {
    if (nodes_.size() < 2) throw DomainError("TimeGrid: at least 2 nodes required");
    if (nodes_.front() != 0.0) throw DomainError("TimeGrid: first node must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!std::isfinite(nodes_[i]) || !(nodes_[i] > nodes_[i - 1]))
            throw DomainError("TimeGrid: nodes must be finite and strictly increasing");
    }
}

TimeGrid TimeGrid::uniform(double T, int n_cells) {
    if (!(T > 0.0) || n_cells < 1) throw DomainError("TimeGrid::uniform: need T > 0, n_cells >= 1");
    std::vector<double> nodes(n_cells + 1);
    for (int i = 0; i <= n_cells; ++i) nodes[i] = T * i / n_cells;
    nodes.back() = T;
    return TimeGrid(std::move(nodes), Grading::uniform, 1.0);
}

TimeGrid TimeGrid::graded(double T, int n_nodes, double ratio, int geometric_cells) {
    if (!(T > 0.0)) throw DomainError("TimeGrid::graded: T must be positive");
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("TimeGrid::graded: ratio must lie in (0,1)");
    if (geometric_cells < 0 || n_nodes < geometric_cells + 3)
        throw DomainError("TimeGrid::graded: too few nodes for the geometric layer");
    // widths are continuous across the junction t_c: t_c (1 - ratio) = h
    const int n_uniform = n_nodes - 2 - geometric_cells;
    const double h = T / (n_uniform + 1.0 / (1.0 - ratio));
    const double t_c = h / (1.0 - ratio);
    std::vector<double> nodes;
    nodes.reserve(n_nodes);
    nodes.push_back(0.0);
    for (int m = geometric_cells; m >= 1; --m) nodes.push_back(t_c * std::pow(ratio, m));
    for (int k = 0; k <= n_uniform; ++k) nodes.push_back(t_c + h * k);
    nodes.back() = T;
    return TimeGrid(std::move(nodes), Grading::geometric, ratio);
}

double TimeGrid::max_width() const {
    double w = 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i) w = std::max(w, nodes_[i] - nodes_[i - 1]);
    return w;
}

std::size_t TimeGrid::index_of(double t) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
    if (it == nodes_.end() || *it != t) throw DomainError("TimeGrid: time is not a grid node");
    return std::size_t(it - nodes_.begin());
}

SampledSignal::SampledSignal(TimeGrid g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw DomainError("SampledSignal: length does not match grid");
    for (const auto& z : values) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw DomainError("SampledSignal: non-finite sample");
    }
}

SampledSignal SampledSignal::from_function(const TimeGrid& g, const std::function<cplx(double)>& f) {
    std::vector<cplx> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
    return SampledSignal(g, std::move(v));
}

double SampledSignal::sup_norm() const {
    double m = 0.0;
    for (const auto& z : values) m = std::max(m, std::abs(z));
    return m;
}

VolterraNTable table_for(const TimeGrid& grid) {
    return VolterraNTable(std::max(grid.back() * 1.0001, 1e-3));
}

std::vector<double> product_weights(const TimeGrid& grid, std::size_t n, const VolterraNTable& N) {
    if (n < 1 || n >= grid.size()) throw DomainError("product_weights: node index out of range");
    const double tn = grid[n];
    std::vector<double> w(n);
    double upper = N(tn - grid[0]);
    for (std::size_t k = 0; k < n; ++k) {
        const double lower = (k + 1 == n) ? 0.0 : N(tn - grid[k + 1]);
        w[k] = upper - lower;
        upper = lower;
    }
    return w;
}

std::vector<double> product_weights(const TimeGrid& grid, std::size_t n) {
    return product_weights(grid, n, table_for(grid));
}

namespace {

template <class Sample>
SampledSignal product_rule(const TimeGrid& grid, const VolterraNTable& N, Sample&& sample) {
    std::vector<cplx> out(grid.size(), cplx{});
    for (std::size_t n = 1; n < grid.size(); ++n) {
        const auto w = product_weights(grid, n, N);
        cplx acc{};
        for (std::size_t k = 0; k < n; ++k) acc += w[k] * sample(k, n);
        out[n] = acc;
    }
    return SampledSignal(grid, std::move(out));
}

} // namespace

SampledSignal apply_I(const SampledSignal& f, const VolterraNTable& N, Sampling sampling) {
    const auto& v = f.values;
    return product_rule(f.grid, N, [&](std::size_t k, std::size_t n) -> cplx {
        switch (sampling) {
        case Sampling::left: return v[k];
        case Sampling::midpoint: return 0.5 * (v[k] + v[k + 1]);
        case Sampling::implicit: return k + 1 == n ? v[n] : 0.5 * (v[k] + v[k + 1]);
        }
        return {};
    });
}

SampledSignal apply_I(const TimeGrid& grid, const std::function<cplx(double)>& f,
                      const VolterraNTable& N, Sampling sampling) {
    const auto& t = grid.nodes();
    std::vector<cplx> left(t.size() - 1), mid(t.size() - 1), right(t.size() - 1);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (sampling == Sampling::left) left[k] = f(t[k]);
        mid[k] = f(0.5 * (t[k] + t[k + 1]));
        if (sampling == Sampling::implicit) right[k] = f(t[k + 1]);
    }
    return product_rule(grid, N, [&](std::size_t k, std::size_t n) -> cplx {
        switch (sampling) {
        case Sampling::left: return left[k];
        case Sampling::midpoint: return mid[k];
        case Sampling::implicit: return k + 1 == n ? right[k] : mid[k];
        }
        return {};
    });
}

double log_kernel_primitive(double s) {
    if (s <= 0.0) return 0.0;
    return s * (1.0 - euler_gamma - std::log(s));
}

SampledSignal apply_J(const SampledSignal& f) {
    const auto& t = f.grid.nodes();
    const auto& v = f.values;
    std::vector<cplx> out(t.size(), cplx{});
    for (std::size_t n = 1; n < t.size(); ++n) {
        cplx acc{};
        double upper = log_kernel_primitive(t[n] - t[0]);
        for (std::size_t k = 0; k < n; ++k) {
            const double lower = (k + 1 == n) ? 0.0 : log_kernel_primitive(t[n] - t[k + 1]);
            acc += (upper - lower) * 0.5 * (v[k] + v[k + 1]);
            upper = lower;
        }
        out[n] = acc;
    }
    return SampledSignal(f.grid, std::move(out));
}

SampledSignal cumulative_integral(const SampledSignal& f) {
    const auto& t = f.grid.nodes();
    std::vector<cplx> out(t.size(), cplx{});
    for (std::size_t n = 1; n < t.size(); ++n)
        out[n] = out[n - 1] + 0.5 * (t[n] - t[n - 1]) * (f.values[n] + f.values[n - 1]);
    return SampledSignal(f.grid, std::move(out));
}

double check_inversion(const SampledSignal& f, const VolterraNTable& N, InversionOrder order) {
    const auto composed = order == InversionOrder::JI ? apply_J(apply_I(f, N))
                                                      : apply_I(apply_J(f), N);
    const auto exact = cumulative_integral(f);
    double r = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n)
        r = std::max(r, std::abs(composed.values[n] - exact.values[n]));
    return r;
}

} // namespace pnls
