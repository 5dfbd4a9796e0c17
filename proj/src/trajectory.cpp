#include "pnls/trajectory.hpp"

#include "pnls/errors.hpp"

#include <algorithm>

namespace pnls {

std::string to_string(RunStatus s) {
    switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::blow_up: return "blow_up";
    }
    return "unknown";
}

double ChargeTrajectory::sup_abs() const {
    double m = 0.0;
    for (const auto& z : q) m = std::max(m, std::abs(z));
    return m;
}

TimeGrid ChargeTrajectory::grid() const {
    if (t.size() < 2) throw DomainError("ChargeTrajectory: fewer than two nodes");
    return TimeGrid(t);
}

SampledSignal ChargeTrajectory::signal() const { return SampledSignal(grid(), q); }

} // namespace pnls
