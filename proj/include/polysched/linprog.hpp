#pragma once

#include <vector>

#include "polysched/common.hpp"

namespace polysched {

// Dense primal simplex for the small LPs the library needs internally
// (feasibility witnesses, water-filling growth steps). Solves
//     maximize c.x  subject to  A x <= b,  x >= 0
// with b >= 0, so the slack basis is feasible and no phase-1 is needed.
// Bland's rule keeps it deterministic and cycle-free.
struct LpResult {
    enum class Status { optimal, unbounded };
    Status status = Status::optimal;
    double objective = 0.0;
    std::vector<double> x;
};

LpResult solve_lp_max(const std::vector<std::vector<double>>& A,
                      const std::vector<double>& b,
                      const std::vector<double>& c);

}  // namespace polysched
