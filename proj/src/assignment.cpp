#include "vmptrack/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace vmptrack {
namespace {

// Rows <= cols.  1-based potentials formulation.
std::vector<int> solve_wide(const RMat& a) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) out[p[j] - 1] = j - 1;
  return out;
}

}  // namespace

std::vector<int> solve_assignment(const RMat& cost) {
  if (!cost.allFinite()) throw std::invalid_argument("solve_assignment: cost matrix must be finite");
  if (cost.rows() == 0) return {};
  if (cost.cols() == 0) return std::vector<int>(cost.rows(), -1);
  if (cost.rows() <= cost.cols()) return solve_wide(cost);
  const auto cols = solve_wide(cost.transpose());
  std::vector<int> out(cost.rows(), -1);
  for (int j = 0; j < static_cast<int>(cols.size()); ++j)
    if (cols[j] >= 0) out[cols[j]] = j;
  return out;
}

double assignment_cost(const RMat& cost, const std::vector<int>& rows_to_cols) {
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(rows_to_cols.size()); ++i)
    if (rows_to_cols[i] >= 0) acc += cost(i, rows_to_cols[i]);
  return acc;
}

}  // namespace vmptrack
