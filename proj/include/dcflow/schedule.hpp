#pragma once

#include <string>
#include <vector>

#include "dcflow/network.hpp"

namespace dcflow {

// Link-sharing convention of a schedule.
//
// virtual_circuit: at most one flow may transmit on a link at any instant;
//   a transmitting flow occupies every link of its path at its own rate.
// pooled: all flows resident on a link within an interval share the link's
//   single operating rate (the sum of their densities); per-flow pieces
//   store the interval-average rate and the per-link serving sub-windows
//   are derived (see rounding.hpp link_service_windows).
enum class ShareMode { virtual_circuit, pooled };

constexpr double kRateEps = 1e-12;  // rates below this count as idle

inline const char* share_mode_name(ShareMode m) {
  return m == ShareMode::virtual_circuit ? "virtual-circuit" : "pooled";
}

struct RatePiece {
  double t0 = 0.0;
  double t1 = 0.0;
  double rate = 0.0;

  double duration() const { return t1 - t0; }
  double data() const { return rate * duration(); }
};

struct FlowPlan {
  std::vector<int> path;         // ordered link indices from src to dst
  std::vector<RatePiece> pieces; // transmission profile within the flow's span
};

struct Schedule {
  ShareMode mode = ShareMode::virtual_circuit;
  std::vector<FlowPlan> flows;  // parallel to the instance's flow list

  double transmitted(std::size_t flow) const {
    double total = 0.0;
    for (const RatePiece& p : flows[flow].pieces) total += p.data();
    return total;
  }
};

// True when the link sequence forms a simple path from src to dst.
inline bool path_connects(const Network& net, const std::vector<int>& path, int src,
                          int dst) {
  if (path.empty()) return false;
  int at = src;
  std::vector<char> seen(static_cast<std::size_t>(net.node_count()), 0);
  seen[static_cast<std::size_t>(at)] = 1;
  for (int e : path) {
    if (e < 0 || e >= net.link_count()) return false;
    const Link& l = net.link(e);
    if (!l.touches(at)) return false;
    at = l.other(at);
    if (seen[static_cast<std::size_t>(at)]) return false;
    seen[static_cast<std::size_t>(at)] = 1;
  }
  return at == dst;
}

}  // namespace dcflow
