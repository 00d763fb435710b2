#pragma once

#include <utility>
#include <vector>

#include "vmptrack/types.hpp"

namespace vmptrack {

struct OspaConfig {
  double cutoff = 10.0;  // c [m]
  double order = 2.0;    // p
  void validate() const;
};

struct OspaResult {
  double distance = 0.0;
  // (truth index, estimate index) of the optimal sub-pattern assignment.
  std::vector<std::pair<int, int>> matches;
  std::vector<double> match_distances;  // Euclidean, uncut
};

OspaResult ospa_detailed(const std::vector<Vec2>& truth, const std::vector<Vec2>& estimate, const OspaConfig& cfg);
double ospa(const std::vector<Vec2>& truth, const std::vector<Vec2>& estimate, const OspaConfig& cfg);

// Position errors of OSPA-matched pairs closer than the cutoff.
std::vector<double> matched_errors(const std::vector<Vec2>& truth, const std::vector<Vec2>& estimate,
                                   const OspaConfig& cfg);

struct CardinalityStats {
  RVec mean;
  RVec std;  // sample standard deviation (n - 1); 0 for a single run
};

// runs[r][n] = estimated cardinality of run r at step n.
CardinalityStats cardinality_stats(const std::vector<std::vector<int>>& runs);

// Right-continuous empirical distribution F(x) = #{s <= x} / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);

  double operator()(double x) const;
  // Smallest sample x with F(x) >= p, for p in [0, 1].
  double quantile(double p) const;
  const std::vector<double>& sorted() const { return sorted_; }
  size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

EmpiricalCdf rmse_cdf(const std::vector<double>& errors);

}  // namespace vmptrack
