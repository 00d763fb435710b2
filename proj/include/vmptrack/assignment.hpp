#pragma once

#include <vector>

#include "vmptrack/types.hpp"

namespace vmptrack {

// Minimum-cost assignment on a rectangular cost matrix (Hungarian method with
// potentials, O(n^2 m)).  Every row is matched when rows <= cols and every
// column otherwise.  Returns, per row, the assigned column or -1.
std::vector<int> solve_assignment(const RMat& cost);

// Total cost of an assignment returned by solve_assignment.
double assignment_cost(const RMat& cost, const std::vector<int>& rows_to_cols);

}  // namespace vmptrack
