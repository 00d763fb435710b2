#include "vmptrack/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vmptrack {

BfgsResult minimize_bfgs(const SmoothObjective& f, const RVec& x0, const RMat& inverse_hessian0,
                         const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  if (inverse_hessian0.rows() != n || inverse_hessian0.cols() != n)
    throw std::invalid_argument("minimize_bfgs: inverse Hessian has the wrong shape");
  BfgsResult res;
  res.x = x0;
  res.gradient.resize(n);
  res.value = f(res.x, &res.gradient);
  if (!std::isfinite(res.value)) throw std::domain_error("minimize_bfgs: starting point outside the domain");

  const RMat metric = inverse_hessian0;
  RMat h = inverse_hessian0;
  auto decrement = [&](const RVec& g) { return std::sqrt(std::max(0.0, g.dot(metric * g))); };

  RVec g_new(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    if (decrement(res.gradient) < options.gradient_tolerance) {
      res.converged = true;
      return res;
    }
    RVec p = -h * res.gradient;
    double slope = p.dot(res.gradient);
    if (!(slope < 0.0)) {
      h = metric;
      p = -h * res.gradient;
      slope = p.dot(res.gradient);
    }
    double step = 1.0;
    const double len = p.norm();
    if (len * step > options.max_step) step = options.max_step / len;

    bool accepted = false;
    RVec x_new(n);
    double f_new = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = res.x + step * p;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) {
      res.converged = decrement(res.gradient) < options.gradient_tolerance;
      return res;
    }
    const RVec s = x_new - res.x;
    const RVec y = g_new - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const RMat i = RMat::Identity(n, n);
      h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    res.x = x_new;
    res.value = f_new;
    res.gradient = g_new;
  }
  res.converged = decrement(res.gradient) < options.gradient_tolerance;
  return res;
}

}  // namespace vmptrack
