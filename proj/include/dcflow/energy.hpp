#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dcflow/network.hpp"
#include "dcflow/schedule.hpp"

namespace dcflow {

namespace detail {

// Integrates sum_e mu * x_e(t)^alpha over the piecewise-constant profiles and
// counts active links. x_e(t) is the sum of the piece rates of all flows
// whose path contains e, which under both sharing conventions equals the
// link's operating rate.
struct EnergyAccumulator {
  double dynamic = 0.0;
  int active_links = 0;
};

inline EnergyAccumulator accumulate_links(const Schedule& schedule,
                                          const std::vector<Flow>& flows,
                                          const Network& net) {
  EnergyAccumulator acc;
  const PowerParams& p = net.power();
  std::vector<std::vector<std::pair<double, double>>> events(
      static_cast<std::size_t>(net.link_count()));
  for (std::size_t i = 0; i < schedule.flows.size() && i < flows.size(); ++i) {
    const FlowPlan& plan = schedule.flows[i];
    for (const RatePiece& piece : plan.pieces) {
      if (piece.rate <= kRateEps || !(piece.t0 < piece.t1)) continue;
      for (int e : plan.path) {
        events[static_cast<std::size_t>(e)].push_back({piece.t0, piece.rate});
        events[static_cast<std::size_t>(e)].push_back({piece.t1, -piece.rate});
      }
    }
  }
  for (auto& ev : events) {
    if (ev.empty()) continue;
    ++acc.active_links;
    std::sort(ev.begin(), ev.end());
    double rate = 0.0;
    std::size_t j = 0;
    while (j < ev.size()) {
      double t = ev[j].first;
      while (j < ev.size() && ev[j].first == t) rate += ev[j++].second;
      if (j >= ev.size()) break;
      double dt = ev[j].first - t;
      if (rate > kRateEps && dt > 0.0) acc.dynamic += p.mu * std::pow(rate, p.alpha) * dt;
    }
  }
  return acc;
}

}  // namespace detail

// Dynamic energy only: integral of mu * x_e(t)^alpha over all links.
inline double dynamic_energy(const Schedule& schedule, const std::vector<Flow>& flows,
                             const Network& net) {
  return detail::accumulate_links(schedule, flows, net).dynamic;
}

// Total energy over the horizon [min release, max deadline]: idle power for
// every link that carries traffic at some point, plus the dynamic integral.
inline double schedule_energy(const Schedule& schedule, const std::vector<Flow>& flows,
                              const Network& net) {
  if (flows.empty()) return 0.0;
  detail::EnergyAccumulator acc = detail::accumulate_links(schedule, flows, net);
  double horizon = horizon_end(flows) - horizon_begin(flows);
  return net.power().sigma * horizon * acc.active_links + acc.dynamic;
}

inline int active_link_count(const Schedule& schedule, const std::vector<Flow>& flows,
                             const Network& net) {
  return detail::accumulate_links(schedule, flows, net).active_links;
}

}  // namespace dcflow
