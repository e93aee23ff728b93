#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcflow/network.hpp"

namespace dcflow {

struct ShortestPathTree {
  int source = -1;
  std::vector<double> dist;
  std::vector<int> via_link;  // link used to enter the node, -1 at source
  std::vector<int> prev;      // predecessor node, -1 at source

  bool reached(int node) const {
    return dist[static_cast<std::size_t>(node)] < std::numeric_limits<double>::infinity();
  }
};

// Dijkstra over the undirected links with non-negative weights, writing into
// a reusable tree (no allocation after first use). Deterministic: ties
// resolve by node index.
inline void dijkstra_into(const Network& net, int source,
                          const std::vector<double>& link_weight,
                          ShortestPathTree& t) {
  std::size_t n = static_cast<std::size_t>(net.node_count());
  t.source = source;
  t.dist.assign(n, std::numeric_limits<double>::infinity());
  t.via_link.assign(n, -1);
  t.prev.assign(n, -1);
  t.dist[static_cast<std::size_t>(source)] = 0.0;

  static thread_local std::vector<char> done;
  done.assign(n, 0);
  for (std::size_t round = 0; round < n; ++round) {
    int u = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v] && t.dist[v] < best) {
        best = t.dist[v];
        u = static_cast<int>(v);
      }
    }
    if (u < 0) break;
    done[static_cast<std::size_t>(u)] = 1;
    for (auto [e, v] : net.adjacency(u)) {
      auto vi = static_cast<std::size_t>(v);
      if (done[vi]) continue;
      double cand = t.dist[static_cast<std::size_t>(u)] + link_weight[static_cast<std::size_t>(e)];
      if (cand < t.dist[vi]) {
        t.dist[vi] = cand;
        t.via_link[vi] = e;
        t.prev[vi] = u;
      }
    }
  }
}

inline ShortestPathTree dijkstra(const Network& net, int source,
                                 const std::vector<double>& link_weight) {
  ShortestPathTree t;
  dijkstra_into(net, source, link_weight, t);
  return t;
}

// Link sequence from the tree's source to dst (source -> dst order).
inline std::vector<int> tree_path(const ShortestPathTree& t, int dst) {
  std::vector<int> path;
  int at = dst;
  while (at != t.source) {
    int e = t.via_link[static_cast<std::size_t>(at)];
    if (e < 0) return {};
    path.push_back(e);
    at = t.prev[static_cast<std::size_t>(at)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Hop-count shortest path with a deterministic tie-break: among all shortest
// paths, the lexicographically smallest node-name sequence; among parallel
// links, the smallest link id.
inline std::vector<int> lex_shortest_path(const Network& net, int src, int dst) {
  std::size_t n = static_cast<std::size_t>(net.node_count());
  std::vector<int> dist(n, -1);
  std::queue<int> queue;
  dist[static_cast<std::size_t>(dst)] = 0;  // BFS from dst, walk from src
  queue.push(dst);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop();
    for (auto [e, v] : net.adjacency(u)) {
      (void)e;
      auto vi = static_cast<std::size_t>(v);
      if (dist[vi] < 0) {
        dist[vi] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push(v);
      }
    }
  }
  if (dist[static_cast<std::size_t>(src)] < 0) return {};

  std::vector<int> path;
  int at = src;
  while (at != dst) {
    int next = -1, via = -1;
    for (auto [e, v] : net.adjacency(at)) {
      if (dist[static_cast<std::size_t>(v)] != dist[static_cast<std::size_t>(at)] - 1)
        continue;
      bool take = false;
      if (next < 0) {
        take = true;
      } else if (v != next) {
        take = net.node_name(v) < net.node_name(next);
      } else {
        take = net.link(e).id < net.link(via).id;
      }
      if (take) {
        next = v;
        via = e;
      }
    }
    path.push_back(via);
    at = next;
  }
  return path;
}

// All simple paths from src to dst with at most max_hops links, in a
// deterministic order. Throws when more than `limit` paths exist.
inline std::vector<std::vector<int>> enumerate_simple_paths(const Network& net, int src,
                                                            int dst, int max_hops,
                                                            std::size_t limit) {
  std::vector<std::vector<int>> found;
  std::vector<int> stack;
  std::vector<char> visited(static_cast<std::size_t>(net.node_count()), 0);

  struct Frame {
    int node;
    std::size_t edge_pos;
  };
  std::vector<Frame> frames;
  frames.push_back({src, 0});
  visited[static_cast<std::size_t>(src)] = 1;

  while (!frames.empty()) {
    Frame& fr = frames.back();
    const auto& adj = net.adjacency(fr.node);
    if (fr.edge_pos >= adj.size()) {
      visited[static_cast<std::size_t>(fr.node)] = 0;
      frames.pop_back();
      if (!stack.empty()) stack.pop_back();
      continue;
    }
    auto [e, v] = adj[fr.edge_pos++];
    if (visited[static_cast<std::size_t>(v)]) continue;
    if (static_cast<int>(stack.size()) + 1 > max_hops) continue;
    stack.push_back(e);
    if (v == dst) {
      found.push_back(stack);
      if (found.size() > limit)
        throw std::runtime_error("enumerate_simple_paths: more than " +
                                 std::to_string(limit) + " paths");
      stack.pop_back();
    } else {
      visited[static_cast<std::size_t>(v)] = 1;
      frames.push_back({v, 0});
    }
  }
  return found;
}

}  // namespace dcflow
