#pragma once

#include "pnls/specfun.hpp"

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace pnls {

using cplx = std::complex<double>;

enum class Grading { uniform, geometric };

// Strictly increasing time nodes starting at 0.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> nodes, Grading grading = Grading::uniform,
                      double ratio = 1.0);

    // n_cells equal cells on [0, T].
    static TimeGrid uniform(double T, int n_cells);

    // Uniform cells of width h on [t_c, T] preceded by `geometric_cells` nodes
    // t_c*ratio^m, ..., t_c*ratio, with t_c = h/(1 - ratio) so cell widths are continuous
    // at t_c. Total node count is n_nodes.
    static TimeGrid graded(double T, int n_nodes, double ratio = 0.7, int geometric_cells = 40);

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double back() const { return nodes_.back(); }
    Grading grading() const noexcept { return grading_; }
    double ratio() const noexcept { return ratio_; }
    double max_width() const;

    // Index of the node equal to t (exact match), or throws DomainError.
    std::size_t index_of(double t) const;

private:
    std::vector<double> nodes_;
    Grading grading_;
    double ratio_;
};

// Complex samples of a function on a TimeGrid.
struct SampledSignal {
    TimeGrid grid;
    std::vector<cplx> values;

    SampledSignal(TimeGrid g, std::vector<cplx> v);
    static SampledSignal from_function(const TimeGrid& g, const std::function<cplx(double)>& f);

    std::size_t size() const noexcept { return values.size(); }
    double sup_norm() const;
};

// Where the piecewise-constant product rule samples the integrand on cell k.
enum class Sampling {
    left,     // f(t_k)
    midpoint, // average of the adjacent node values, or f at the cell centre for callables
    implicit  // midpoint on history cells, f(t_n) on the cell that ends at t_n
};

// w_k = N(t_n - t_k) - N(t_n - t_{k+1}), k = 0..n-1.
std::vector<double> product_weights(const TimeGrid& grid, std::size_t n, const VolterraNTable& N);
std::vector<double> product_weights(const TimeGrid& grid, std::size_t n);

// Discrete (I f)(t_n) on every node; value at t_0 is 0.
SampledSignal apply_I(const SampledSignal& f, const VolterraNTable& N,
                      Sampling sampling = Sampling::midpoint);
SampledSignal apply_I(const TimeGrid& grid, const std::function<cplx(double)>& f,
                      const VolterraNTable& N, Sampling sampling = Sampling::midpoint);

// Discrete (J f)(t_n) with the logarithmic kernel -gamma - log(t - tau) integrated
// exactly over each cell; f sampled as the cell average of its end values.
SampledSignal apply_J(const SampledSignal& f);

// Exact integral of -gamma - log(s) over [0, s].
double log_kernel_primitive(double s);

// Cumulative trapezoid integral int_0^{t_n} f.
SampledSignal cumulative_integral(const SampledSignal& f);

enum class InversionOrder { JI, IJ };

// max_n |(J I f)(t_n) - int_0^{t_n} f| (or with I J).
double check_inversion(const SampledSignal& f, const VolterraNTable& N,
                       InversionOrder order = InversionOrder::JI);

// Table covering every node difference of `grid`.
VolterraNTable table_for(const TimeGrid& grid);

} // namespace pnls
