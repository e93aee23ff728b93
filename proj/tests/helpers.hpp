#pragma once

// Shared instance builders for the test suites.

#include <cmath>
#include <cstdint>
#include <vector>

#include "dcflow/dcflow.hpp"

namespace testutil {

// Line network A - B - C with quadratic link power, two flows:
// j1: A -> C, span [2,4], volume 6 (two hops)
// j2: A -> B, span [1,3], volume 8 (one hop)
// Closed-form optimum: sqrt(2) s1 = s2 = (8 + 6 sqrt 2) / 3, both flows
// served back to back on link A--B over [1,4].
struct LineExample {
  dcflow::Network network;
  std::vector<dcflow::Flow> flows;
  std::vector<std::vector<int>> paths;
};

inline LineExample make_line_example(double capacity = 1e6) {
  dcflow::PowerParams p{0.0, 1.0, 2.0, capacity};
  dcflow::Network net({"A", "B", "C"},
                      {{"AB", "A", "B"}, {"BC", "B", "C"}}, p);
  std::vector<dcflow::Flow> flows{
      {"j1", 6.0, 2.0, 4.0, net.node_index("A"), net.node_index("C")},
      {"j2", 8.0, 1.0, 3.0, net.node_index("A"), net.node_index("B")},
  };
  std::vector<std::vector<int>> paths{
      {net.link_index("AB"), net.link_index("BC")},
      {net.link_index("AB")},
  };
  return {std::move(net), std::move(flows), std::move(paths)};
}

inline double line_example_s2() { return (8.0 + 6.0 * std::sqrt(2.0)) / 3.0; }
inline double line_example_s1() { return line_example_s2() / std::sqrt(2.0); }
inline double line_example_dynamic_energy() {
  return (96.0 * std::sqrt(2.0) + 136.0) / 3.0;
}

// Parallel-link reduction gadget: m parallel links, unit-time flows, sigma
// tuned so the ideal operating rate equals B.
struct Gadget {
  dcflow::Topology topology;
  std::vector<dcflow::Flow> flows;
  double B = 0.0;
};

inline Gadget make_gadget(int m, double B, double capacity, double alpha,
                          const std::vector<double>& volumes) {
  dcflow::PowerParams p;
  p.mu = 1.0;
  p.alpha = alpha;
  p.capacity = capacity;
  p.sigma = p.mu * (alpha - 1.0) * std::pow(B, alpha);
  Gadget g{dcflow::make_parallel_links(m, p), {}, B};
  int src = g.topology.network.node_index("src");
  int dst = g.topology.network.node_index("dst");
  for (std::size_t i = 0; i < volumes.size(); ++i)
    g.flows.push_back({"g" + std::to_string(i), volumes[i], 0.0, 1.0, src, dst});
  return g;
}

struct TinyInstance {
  dcflow::Topology topology;
  std::vector<dcflow::Flow> flows;
  std::vector<std::vector<int>> paths;
};

// Random small instance on a line or parallel-link topology with fixed
// routes; used for the scheduler-vs-reference equivalence sweeps.
// parallel_only restricts to single-hop routes, where the critical-interval
// structure is exact (see the dcfs tests).
inline TinyInstance make_tiny_instance(std::uint64_t seed, bool parallel_only = false) {
  dcflow::Rng rng(seed);
  TinyInstance t;
  dcflow::PowerParams p;
  p.sigma = 0.0;
  p.mu = 0.5 + 1.5 * rng.uniform();
  double alphas[3] = {2.0, 3.0, 4.0};
  p.alpha = alphas[rng.index(3)];
  p.capacity = 1e9;  // rate cap relaxed

  bool line = !parallel_only && rng.uniform() < 0.5;
  int flow_count = 1 + static_cast<int>(rng.index(4));
  if (line) {
    int nodes = 2 + static_cast<int>(rng.index(3));
    t.topology = dcflow::make_line(nodes, p);
  } else {
    int m = 2 + static_cast<int>(rng.index(2));
    t.topology = dcflow::make_parallel_links(m, p);
  }
  const dcflow::Network& net = t.topology.network;

  for (int i = 0; i < flow_count; ++i) {
    dcflow::Flow f;
    f.id = "t" + std::to_string(i);
    f.volume = 1.0 + 9.0 * rng.uniform();
    f.release = 10.0 * rng.uniform();
    f.deadline = f.release + 0.5 + 4.5 * rng.uniform();
    f.src = t.topology.hosts[rng.index(t.topology.hosts.size())];
    do {
      f.dst = t.topology.hosts[rng.index(t.topology.hosts.size())];
    } while (f.dst == f.src);
    t.flows.push_back(f);

    if (line) {
      t.paths.push_back(dcflow::lex_shortest_path(net, f.src, f.dst));
    } else {
      int e = static_cast<int>(rng.index(static_cast<std::size_t>(net.link_count())));
      t.paths.push_back({e});
    }
  }
  return t;
}

}  // namespace testutil
