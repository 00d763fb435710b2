#include "vmptrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmptrack/assignment.hpp"

namespace vmptrack {

void OspaConfig::validate() const {
  if (!(cutoff > 0.0)) throw ConfigError("ospa: cutoff must be positive");
  if (!(order >= 1.0)) throw ConfigError("ospa: order must be at least 1");
}

OspaResult ospa_detailed(const std::vector<Vec2>& truth, const std::vector<Vec2>& estimate, const OspaConfig& cfg) {
  cfg.validate();
  OspaResult out;
  const bool swap = truth.size() > estimate.size();
  const auto& small = swap ? estimate : truth;
  const auto& large = swap ? truth : estimate;
  const size_t m = small.size(), n = large.size();
  if (n == 0) return out;
  RMat cost(m, n);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j)
      cost(i, j) = std::pow(std::min((small[i] - large[j]).norm(), cfg.cutoff), cfg.order);
  const auto assign = solve_assignment(cost);
  double total = std::pow(cfg.cutoff, cfg.order) * static_cast<double>(n - m);
  for (size_t i = 0; i < m; ++i) {
    const int j = assign[i];
    total += cost(i, j);
    const int t = swap ? j : static_cast<int>(i);
    const int e = swap ? static_cast<int>(i) : j;
    out.matches.emplace_back(t, e);
    out.match_distances.push_back((truth[t] - estimate[e]).norm());
  }
  out.distance = std::pow(total / static_cast<double>(n), 1.0 / cfg.order);
  return out;
}

double ospa(const std::vector<Vec2>& truth, const std::vector<Vec2>& estimate, const OspaConfig& cfg) {
  return ospa_detailed(truth, estimate, cfg).distance;
}

std::vector<double> matched_errors(const std::vector<Vec2>& truth, const std::vector<Vec2>& estimate,
                                   const OspaConfig& cfg) {
  std::vector<double> out;
  for (double d : ospa_detailed(truth, estimate, cfg).match_distances)
    if (d < cfg.cutoff) out.push_back(d);
  return out;
}

CardinalityStats cardinality_stats(const std::vector<std::vector<int>>& runs) {
  if (runs.empty()) throw std::invalid_argument("cardinality_stats: no runs");
  const size_t steps = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != steps) throw std::invalid_argument("cardinality_stats: histories differ in length");
  CardinalityStats out;
  out.mean = RVec::Zero(steps);
  out.std = RVec::Zero(steps);
  const double n = static_cast<double>(runs.size());
  for (size_t s = 0; s < steps; ++s) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r[s];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r[s] - mean) * (r[s] - mean);
    out.mean[s] = mean;
    out.std[s] = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw std::invalid_argument("EmpiricalCdf: no samples");
  for (double s : sorted_)
    if (!std::isfinite(s)) throw std::invalid_argument("EmpiricalCdf: non-finite sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("EmpiricalCdf::quantile: p outside [0, 1]");
  const double n = static_cast<double>(sorted_.size());
  const auto k = static_cast<size_t>(std::max(1.0, std::ceil(p * n - 1e-12)));
  return sorted_[std::min(k, sorted_.size()) - 1];
}

EmpiricalCdf rmse_cdf(const std::vector<double>& errors) { return EmpiricalCdf(errors); }

}  // namespace vmptrack
