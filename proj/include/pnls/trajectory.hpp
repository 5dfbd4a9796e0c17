#pragma once

#include "pnls/volterra_ops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pnls {

enum class RunStatus { completed, blow_up };

std::string to_string(RunStatus s);

struct BlowUpInfo {
    double t_star = 0.0;    // estimated blow-up time
    double window_lo = 0.0; // last resolved node
    double window_hi = 0.0; // first time the solver could not reach
    bool resolved = false;  // growth of |q| captured over at least one decade
};

// Charge samples on the accepted nodes of a run. A blow-up run may hold only t = 0.
struct ChargeTrajectory {
    std::vector<double> t;
    std::vector<cplx> q;
    RunStatus status = RunStatus::completed;
    std::optional<BlowUpInfo> blowup;
    double fixed_point_residual = 0.0;
    bool outside_theory = false; // sigma in (0, 1/2)

    double t_end() const { return t.back(); }
    double sup_abs() const;
    // Requires at least two nodes.
    TimeGrid grid() const;
    SampledSignal signal() const;
};

} // namespace pnls
