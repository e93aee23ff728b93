#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dcflow/network.hpp"

namespace dcflow {

// Breakpoint structure over the union of all flow spans: T is the sorted set
// of release times and deadlines, I_k = [t_{k-1}, t_k], beta_k the fraction
// of the horizon taken by I_k and lambda the horizon over the shortest
// interval. A flow is active in I_k iff I_k lies inside its span.
struct IntervalStructure {
  std::vector<double> breakpoints;          // t_0 < ... < t_K
  std::vector<double> length;               // |I_k|, k = 0..K-1
  std::vector<double> fraction;             // beta_k
  double lambda = 1.0;                      // (t_K - t_0) / min_k |I_k|
  std::vector<std::vector<int>> active;     // per interval: active flow indices
  std::vector<std::vector<int>> of_flow;    // per flow: its interval indices

  int count() const { return static_cast<int>(length.size()); }
  double begin(int k) const { return breakpoints[static_cast<std::size_t>(k)]; }
  double end(int k) const { return breakpoints[static_cast<std::size_t>(k) + 1]; }
  double horizon() const { return breakpoints.back() - breakpoints.front(); }
};

inline IntervalStructure build_intervals(const std::vector<Flow>& flows) {
  if (flows.empty())
    throw std::invalid_argument("build_intervals: at least one flow required");

  IntervalStructure s;
  s.breakpoints.reserve(2 * flows.size());
  for (const Flow& f : flows) {
    s.breakpoints.push_back(f.release);
    s.breakpoints.push_back(f.deadline);
  }
  std::sort(s.breakpoints.begin(), s.breakpoints.end());
  s.breakpoints.erase(std::unique(s.breakpoints.begin(), s.breakpoints.end()),
                      s.breakpoints.end());

  // merge numerically coincident breakpoints; a zero-length interval carries
  // no energy and would blow up lambda
  const double span = s.breakpoints.back() - s.breakpoints.front();
  const double eps = 1e-12 * std::max(1.0, span);
  std::vector<double> merged;
  merged.reserve(s.breakpoints.size());
  for (double t : s.breakpoints) {
    if (merged.empty() || t - merged.back() > eps) merged.push_back(t);
  }
  s.breakpoints = std::move(merged);
  if (s.breakpoints.size() < 2)
    throw std::invalid_argument("build_intervals: degenerate time structure");

  std::size_t k_count = s.breakpoints.size() - 1;
  s.length.resize(k_count);
  s.fraction.resize(k_count);
  s.active.resize(k_count);
  s.of_flow.resize(flows.size());
  double min_len = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    s.length[k] = s.breakpoints[k + 1] - s.breakpoints[k];
    s.fraction[k] = s.length[k] / span;
    min_len = std::min(min_len, s.length[k]);
  }
  s.lambda = span / min_len;

  for (std::size_t i = 0; i < flows.size(); ++i) {
    const Flow& f = flows[i];
    for (std::size_t k = 0; k < k_count; ++k) {
      if (f.release <= s.breakpoints[k] + eps &&
          f.deadline >= s.breakpoints[k + 1] - eps) {
        s.active[k].push_back(static_cast<int>(i));
        s.of_flow[i].push_back(static_cast<int>(k));
      }
    }
    if (s.of_flow[i].empty())
      throw std::logic_error("build_intervals: flow " + f.id +
                             " not active in any interval");
  }
  return s;
}

}  // namespace dcflow
