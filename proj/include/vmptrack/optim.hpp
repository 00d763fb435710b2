#pragma once

#include <functional>
#include <limits>

#include "vmptrack/types.hpp"

namespace vmptrack {

// Objective returning f(x) and, when grad is non-null, its gradient.
// Returning +inf marks x as outside the domain.
using SmoothObjective = std::function<double(const RVec& x, RVec* grad)>;

struct BfgsOptions {
  int max_iterations = 50;
  // Stop when sqrt(g^T H0 g) falls below this, H0 the initial inverse Hessian.
  double gradient_tolerance = 1e-6;
  // Upper bound on the Euclidean length of one step.
  double max_step = std::numeric_limits<double>::infinity();
};

struct BfgsResult {
  RVec x;
  double value = 0.0;
  RVec gradient;
  int iterations = 0;
  bool converged = false;
};

// Quasi-Newton minimization with Armijo backtracking.  inverse_hessian0 is the
// initial inverse-Hessian guess and also defines the metric of the stopping test.
BfgsResult minimize_bfgs(const SmoothObjective& f, const RVec& x0, const RMat& inverse_hessian0,
                         const BfgsOptions& options = {});

}  // namespace vmptrack
