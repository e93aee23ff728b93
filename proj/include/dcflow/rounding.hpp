#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcflow/dcfs.hpp"
#include "dcflow/fmcf.hpp"
#include "dcflow/intervals.hpp"
#include "dcflow/network.hpp"
#include "dcflow/rng.hpp"
#include "dcflow/schedule.hpp"

namespace dcflow {

constexpr double kPathResidualTol = 1e-9;

// Weighted candidate paths of one flow, deduplicated by link sequence across
// the intervals of its span.
struct WeightedPaths {
  std::vector<std::vector<int>> paths;
  std::vector<double> combined_weight;              // sums to 1
  std::vector<std::vector<double>> interval_weight; // [candidate][interval slot]
};

// Decomposes one commodity's fractional routing into weighted paths in the
// Raghavan-Thompson manner: repeatedly walk a source->destination path in the
// positive subgraph, peel off the bottleneck fraction, stop when the source
// outflow is exhausted. Weights are renormalized to sum to exactly 1.
inline std::vector<std::pair<std::vector<int>, double>> extract_paths(
    const Network& net, const FmcfSolution& solution, std::size_t slot,
    const std::vector<Flow>& flows) {
  const Flow& flow = flows[static_cast<std::size_t>(solution.commodities[slot])];
  const double demand = flow.density();
  const std::size_t links = static_cast<std::size_t>(net.link_count());
  std::vector<double> residual(2 * links);
  for (std::size_t a = 0; a < 2 * links; ++a)
    residual[a] = solution.arc_flow[slot][a] / demand;

  std::vector<std::pair<std::vector<int>, double>> result;
  std::vector<int> arc_path;
  std::vector<char> visited(static_cast<std::size_t>(net.node_count()), 0);

  for (std::size_t round = 0; round <= 2 * links; ++round) {
    // depth-first search along positive residual arcs, with backtracking
    arc_path.clear();
    std::fill(visited.begin(), visited.end(), 0);
    struct Frame {
      int node;
      std::size_t edge_pos;
    };
    std::vector<Frame> stack{{flow.src, 0}};
    visited[static_cast<std::size_t>(flow.src)] = 1;
    bool found = false;
    while (!stack.empty() && !found) {
      Frame& fr = stack.back();
      const auto& adj = net.adjacency(fr.node);
      if (fr.edge_pos >= adj.size()) {
        visited[static_cast<std::size_t>(fr.node)] = 0;
        stack.pop_back();
        if (!arc_path.empty()) arc_path.pop_back();
        continue;
      }
      auto [e, v] = adj[fr.edge_pos++];
      if (visited[static_cast<std::size_t>(v)]) continue;
      std::size_t arc = static_cast<std::size_t>(2 * e) + (net.link(e).u == fr.node ? 0 : 1);
      if (residual[arc] <= kPathResidualTol) continue;
      arc_path.push_back(static_cast<int>(arc));
      if (v == flow.dst) {
        found = true;
      } else {
        visited[static_cast<std::size_t>(v)] = 1;
        stack.push_back({v, 0});
      }
    }
    if (!found || arc_path.empty()) break;

    double w = std::numeric_limits<double>::infinity();
    for (int arc : arc_path) w = std::min(w, residual[static_cast<std::size_t>(arc)]);
    std::vector<int> path;
    path.reserve(arc_path.size());
    for (int arc : arc_path) {
      residual[static_cast<std::size_t>(arc)] -= w;
      path.push_back(arc / 2);
    }
    result.push_back({std::move(path), w});
  }

  double total = 0.0;
  for (auto& [path, w] : result) total += w;
  if (result.empty() || total < 1.0 - 1e-4)
    throw std::logic_error("extract_paths: conservation violated for flow " + flow.id +
                           " (decomposed " + std::to_string(total) + ")");
  for (auto& [path, w] : result) w /= total;
  return result;
}

// Combines per-interval path weights into the cross-interval path weights
// w_bar(P) = sum_k w_P(k) |I_k| / (d - r); a path unused in an interval
// contributes weight 0 there.
inline WeightedPaths combine_weights(
    const std::vector<std::vector<std::pair<std::vector<int>, double>>>& per_interval,
    const std::vector<int>& interval_ids, const IntervalStructure& intervals,
    const Flow& flow) {
  if (per_interval.size() != interval_ids.size())
    throw std::invalid_argument("combine_weights: one decomposition per interval");
  WeightedPaths out;
  std::map<std::vector<int>, std::size_t> index;
  for (std::size_t slot = 0; slot < per_interval.size(); ++slot) {
    for (const auto& [path, w] : per_interval[slot]) {
      auto it = index.find(path);
      if (it == index.end()) {
        it = index.emplace(path, out.paths.size()).first;
        out.paths.push_back(path);
        out.combined_weight.push_back(0.0);
        out.interval_weight.emplace_back(per_interval.size(), 0.0);
      }
      out.interval_weight[it->second][slot] += w;
    }
  }
  double span = flow.span_length();
  for (std::size_t c = 0; c < out.paths.size(); ++c) {
    for (std::size_t slot = 0; slot < interval_ids.size(); ++slot) {
      double len = intervals.length[static_cast<std::size_t>(interval_ids[slot])];
      out.combined_weight[c] += out.interval_weight[c][slot] * len / span;
    }
  }
  double total = 0.0;
  for (double w : out.combined_weight) total += w;
  if (std::abs(total - 1.0) > 1e-6)
    throw std::logic_error("combine_weights: weights of flow " + flow.id +
                           " sum to " + std::to_string(total));
  for (double& w : out.combined_weight) w /= total;
  return out;
}

struct RoundedRouting {
  std::vector<std::vector<int>> path;  // chosen path per flow
  std::vector<std::size_t> choice;     // candidate index per flow
  std::uint64_t seed = 0;
};

// One independent categorical draw per flow with the combined weights as
// probabilities. Deterministic for a given seed.
inline RoundedRouting choose_paths(const std::vector<WeightedPaths>& weighted,
                                   std::uint64_t seed) {
  RoundedRouting routing;
  routing.seed = seed;
  routing.path.resize(weighted.size());
  routing.choice.resize(weighted.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    routing.choice[i] = rng.categorical(weighted[i].combined_weight);
    routing.path[i] = weighted[i].paths[routing.choice[i]];
  }
  return routing;
}

struct CapacityViolation {
  int link = -1;
  int interval = -1;
  double pooled_rate = 0.0;
};

// Pooled-rate schedule: in every interval each active flow moves
// density * |I_k| data; each link serves its residents sequentially (EDF) at
// the pooled rate sum of their densities. Per-flow pieces carry the
// interval-average rate (the flow's density); the per-link serving windows
// are derived by link_service_windows. Capacity violations are collected,
// not repaired.
inline Schedule assign_rates(const Network& net, const std::vector<Flow>& flows,
                             const IntervalStructure& intervals,
                             const std::vector<std::vector<int>>& chosen_paths,
                             std::vector<CapacityViolation>* violations = nullptr) {
  Schedule schedule;
  schedule.mode = ShareMode::pooled;
  schedule.flows.resize(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    schedule.flows[i].path = chosen_paths[i];
    for (int k : intervals.of_flow[i]) {
      schedule.flows[i].pieces.push_back(
          {intervals.begin(k), intervals.end(k), flows[i].density()});
    }
  }
  if (violations) {
    violations->clear();
    const double cap = net.power().capacity;
    std::vector<double> pooled(static_cast<std::size_t>(net.link_count()));
    for (int k = 0; k < intervals.count(); ++k) {
      std::fill(pooled.begin(), pooled.end(), 0.0);
      for (int i : intervals.active[static_cast<std::size_t>(k)])
        for (int e : chosen_paths[static_cast<std::size_t>(i)])
          pooled[static_cast<std::size_t>(e)] += flows[static_cast<std::size_t>(i)].density();
      for (int e = 0; e < net.link_count(); ++e)
        if (pooled[static_cast<std::size_t>(e)] > cap * (1.0 + 1e-9) + 1e-12)
          violations->push_back({e, k, pooled[static_cast<std::size_t>(e)]});
    }
  }
  return schedule;
}

struct ServiceWindow {
  int flow = -1;
  double t0 = 0.0;
  double t1 = 0.0;
  double rate = 0.0;  // the link's pooled rate
};

// EDF serving order of one link within one interval of a pooled schedule.
// The windows partition the interval and each flow's window moves exactly
// density * |I_k| data.
inline std::vector<ServiceWindow> link_service_windows(
    const std::vector<Flow>& flows, const IntervalStructure& intervals,
    const Schedule& schedule, int link, int interval) {
  std::vector<int> residents;
  for (int i : intervals.active[static_cast<std::size_t>(interval)]) {
    const auto& path = schedule.flows[static_cast<std::size_t>(i)].path;
    if (std::find(path.begin(), path.end(), link) != path.end()) residents.push_back(i);
  }
  residents = edf_order(flows, std::move(residents));
  double pooled = 0.0;
  for (int i : residents) pooled += flows[static_cast<std::size_t>(i)].density();
  std::vector<ServiceWindow> windows;
  double t = intervals.begin(interval);
  double len = intervals.length[static_cast<std::size_t>(interval)];
  for (int i : residents) {
    double share = flows[static_cast<std::size_t>(i)].density() / pooled;
    windows.push_back({i, t, t + share * len, pooled});
    t += share * len;
  }
  if (!windows.empty()) windows.back().t1 = intervals.end(interval);
  return windows;
}

struct RandomScheduleDiagnostics {
  int retries_used = 0;
  std::uint64_t base_seed = 0;
  std::uint64_t final_seed = 0;
  double lambda = 1.0;
  double max_density = 0.0;
  int interval_count = 0;
  std::vector<double> interval_objective;      // F-MCF objective per interval
  double ratio_bound = 0.0;  // lambda^alpha * (n^2 ln max(D, e))^(alpha-1)
  std::vector<CapacityViolation> last_violations;
};

struct RandomScheduleResult {
  bool success = false;
  Schedule schedule;
  RandomScheduleDiagnostics diagnostics;
  std::vector<WeightedPaths> weighted;            // kept for inspection / dumps
  std::vector<FmcfSolution> fractional;           // populated with keep_fractional
  std::vector<std::size_t> fractional_of_interval;
};

struct RandomScheduleOptions {
  int max_retries = 64;
  FmcfOptions fmcf;
  bool keep_fractional = false;
};

// Random-Schedule: per-interval fractional routing, path decomposition,
// cross-interval weight combination, one randomized path draw per flow and
// pooled per-interval rates. Capacity violations trigger a fresh draw with a
// derived seed, up to max_retries.
inline RandomScheduleResult random_schedule(const Network& net,
                                            const std::vector<Flow>& flows,
                                            std::uint64_t seed,
                                            const RandomScheduleOptions& options = {}) {
  if (flows.empty())
    throw std::invalid_argument("random_schedule: no flows");
  IntervalStructure intervals = build_intervals(flows);

  RandomScheduleResult result;
  result.diagnostics.base_seed = seed;
  result.diagnostics.lambda = intervals.lambda;
  result.diagnostics.interval_count = intervals.count();
  for (const Flow& f : flows)
    result.diagnostics.max_density = std::max(result.diagnostics.max_density, f.density());
  {
    const double alpha = net.power().alpha;
    double n = static_cast<double>(flows.size());
    double log_d = std::log(std::max(result.diagnostics.max_density, std::exp(1.0)));
    result.diagnostics.ratio_bound =
        std::pow(intervals.lambda, alpha) * std::pow(n * n * log_d, alpha - 1.0);
  }

  // identical active sets solve once
  std::vector<FmcfSolution> solutions;
  std::map<std::vector<int>, std::size_t> cache;
  std::vector<std::size_t> solution_of_interval(static_cast<std::size_t>(intervals.count()));
  result.diagnostics.interval_objective.resize(static_cast<std::size_t>(intervals.count()));
  for (int k = 0; k < intervals.count(); ++k) {
    const auto& active = intervals.active[static_cast<std::size_t>(k)];
    auto it = cache.find(active);
    if (it == cache.end()) {
      solutions.push_back(solve_fmcf(net, flows, active, options.fmcf));
      it = cache.emplace(active, solutions.size() - 1).first;
    }
    solution_of_interval[static_cast<std::size_t>(k)] = it->second;
    result.diagnostics.interval_objective[static_cast<std::size_t>(k)] =
        solutions[it->second].objective;
  }

  // decompose every interval's routing, then combine weights per flow
  std::vector<std::vector<std::vector<std::pair<std::vector<int>, double>>>> decomposed(
      flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i)
    decomposed[i].resize(intervals.of_flow[i].size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    for (std::size_t slot = 0; slot < intervals.of_flow[i].size(); ++slot) {
      int k = intervals.of_flow[i][slot];
      const FmcfSolution& sol = solutions[solution_of_interval[static_cast<std::size_t>(k)]];
      auto pos = std::lower_bound(sol.commodities.begin(), sol.commodities.end(),
                                  static_cast<int>(i));
      decomposed[i][slot] = extract_paths(
          net, sol, static_cast<std::size_t>(pos - sol.commodities.begin()), flows);
    }
  }
  result.weighted.resize(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i)
    result.weighted[i] =
        combine_weights(decomposed[i], intervals.of_flow[i], intervals, flows[i]);
  if (options.keep_fractional) {
    result.fractional = solutions;
    result.fractional_of_interval = solution_of_interval;
  }

  std::vector<CapacityViolation> violations;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    std::uint64_t attempt_seed =
        attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt));
    RoundedRouting routing = choose_paths(result.weighted, attempt_seed);
    Schedule schedule = assign_rates(net, flows, intervals, routing.path, &violations);
    result.diagnostics.retries_used = attempt;
    result.diagnostics.final_seed = attempt_seed;
    if (violations.empty()) {
      result.success = true;
      result.schedule = std::move(schedule);
      return result;
    }
    result.diagnostics.last_violations = violations;
  }
  result.success = false;
  return result;
}

}  // namespace dcflow
