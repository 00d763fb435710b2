#pragma once

// Test-side generators and brute-force oracles shared by the unit tests and
// the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "vmptrack/vmp.hpp"

namespace vmptrack::testing {

inline cdouble random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale / std::sqrt(2.0));
  return {n(rng), n(rng)};
}

// Random (alpha, xi) sub-problem: K steering-like vectors of dimension n,
// data drawn from a random subset of them plus noise.
inline ReflectivityProblem random_problem(std::mt19937_64& rng, int k, int n = 24) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  CMat s(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) s(i, j) = random_complex(rng);
  // occasional near-duplicates mimic unresolved objects
  if (k > 1 && uni(rng) < 0.3) s.col(1) = s.col(0) + 0.2 * s.col(1);
  CVec z = CVec::Zero(n);
  for (int j = 0; j < k; ++j)
    if (uni(rng) < 0.5) z += random_complex(rng, 2.0 * uni(rng)) * s.col(j);
  for (int i = 0; i < n; ++i) z[i] += random_complex(rng);
  RVec prior(k);
  for (int j = 0; j < k; ++j) prior[j] = std::exp(std::log(0.05) + std::log(100.0) * uni(rng));
  return ReflectivityProblem(s.adjoint() * s, s.adjoint() * z, prior);
}

inline RVec random_xi(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  RVec xi(k);
  for (int j = 0; j < k; ++j) {
    const double r = uni(rng);
    xi[j] = r < 0.2 ? 0.0 : (r < 0.4 ? 1.0 : uni(rng));
  }
  return xi;
}

// Maximizer of existence_objective over a uniform grid of the given step.
inline double grid_argmax_xi(int k, const ReflectivityProblem& p, const RVec& xi, double prev,
                             const ExistenceParams& params, double step, double* best_value = nullptr) {
  double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double v = existence_objective(k, p, xi, x, prev, params);
    if (v > best) best = v, arg = x;
  }
  if (best_value) *best_value = best;
  return arg;
}

// Minimum total cost over all injective row-to-column maps (rows <= cols) or
// column-to-row maps (rows > cols).
inline double brute_force_assignment(const RMat& cost) {
  const bool tr = cost.rows() > cost.cols();
  const RMat c = tr ? RMat(cost.transpose()) : cost;
  std::vector<int> cols(c.cols());
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < c.rows(); ++i) s += c(i, cols[i]);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// OSPA by enumerating every injective map from the smaller set into the larger.
inline double ospa_oracle(const std::vector<Vec2>& x, const std::vector<Vec2>& y, double c, double p) {
  const auto& small = x.size() <= y.size() ? x : y;
  const auto& large = x.size() <= y.size() ? y : x;
  const size_t m = small.size(), n = large.size();
  if (n == 0) return 0.0;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (size_t i = 0; i < m; ++i) s += std::pow(std::min((small[i] - large[perm[i]]).norm(), c), p);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow((best + std::pow(c, p) * static_cast<double>(n - m)) / static_cast<double>(n), 1.0 / p);
}

// Minimum GNN cost by enumerating every partial matching of gated pairs;
// unmatched tracks and detections cost the gate each.
inline double gnn_oracle(const RMat& d2, double gate) {
  const int nt = static_cast<int>(d2.rows()), nd = static_cast<int>(d2.cols());
  std::vector<bool> used(nd, false);
  std::function<double(int)> rec = [&](int i) -> double {
    if (i == nt) {
      double c = 0.0;
      for (int j = 0; j < nd; ++j)
        if (!used[j]) c += gate;
      return c;
    }
    double best = gate + rec(i + 1);
    for (int j = 0; j < nd; ++j)
      if (!used[j] && d2(i, j) <= gate) {
        used[j] = true;
        best = std::min(best, d2(i, j) + rec(i + 1));
        used[j] = false;
      }
    return best;
  };
  return rec(0);
}

}  // namespace vmptrack::testing
