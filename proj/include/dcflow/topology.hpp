#pragma once

#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dcflow/network.hpp"

namespace dcflow {

// A generated network plus the nodes that may act as flow endpoints.
struct Topology {
  Network network;
  std::vector<int> hosts;
};

namespace detail {

using LinkDef = std::tuple<std::string, std::string, std::string>;

inline LinkDef link_between(const std::string& u, const std::string& v) {
  return {u + "--" + v, u, v};
}

}  // namespace detail

// k-ary fat-tree: (k/2)^2 core switches, k pods of k/2 aggregation and k/2
// edge switches, k/2 hosts per edge switch. k = 4 gives 20 switches, 16
// hosts and 48 links; k = 8 gives 80 switches and 128 hosts.
inline Topology make_fat_tree(int k, const PowerParams& power) {
  if (k < 2 || k % 2 != 0)
    throw std::invalid_argument("make_fat_tree: arity must be even and >= 2");
  const int half = k / 2;
  std::vector<std::string> nodes;
  std::vector<detail::LinkDef> links;
  std::vector<std::string> hosts;

  for (int a = 0; a < half; ++a)
    for (int b = 0; b < half; ++b)
      nodes.push_back("core" + std::to_string(a * half + b));

  for (int p = 0; p < k; ++p) {
    std::string pod = "pod" + std::to_string(p);
    for (int a = 0; a < half; ++a) {
      std::string agg = pod + "-agg" + std::to_string(a);
      nodes.push_back(agg);
      for (int b = 0; b < half; ++b)
        links.push_back(detail::link_between("core" + std::to_string(a * half + b), agg));
    }
    for (int e = 0; e < half; ++e) {
      std::string edge = pod + "-edge" + std::to_string(e);
      nodes.push_back(edge);
      for (int a = 0; a < half; ++a)
        links.push_back(detail::link_between(pod + "-agg" + std::to_string(a), edge));
      for (int h = 0; h < half; ++h) {
        std::string host = edge + "-host" + std::to_string(h);
        nodes.push_back(host);
        hosts.push_back(host);
        links.push_back(detail::link_between(edge, host));
      }
    }
  }

  Topology t{Network(nodes, links, power), {}};
  for (const std::string& h : hosts) t.hosts.push_back(t.network.node_index(h));
  return t;
}

// Path of n nodes joined by n-1 links; every node is a host.
inline Topology make_line(int n, const PowerParams& power) {
  if (n < 2) throw std::invalid_argument("make_line: need at least 2 nodes");
  std::vector<std::string> nodes;
  std::vector<detail::LinkDef> links;
  for (int i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i)
    links.push_back(detail::link_between(nodes[static_cast<std::size_t>(i)],
                                         nodes[static_cast<std::size_t>(i) + 1]));
  Topology t{Network(nodes, links, power), {}};
  for (int i = 0; i < n; ++i) t.hosts.push_back(i);
  return t;
}

// Two nodes joined by m parallel links.
inline Topology make_parallel_links(int m, const PowerParams& power) {
  if (m < 1) throw std::invalid_argument("make_parallel_links: need at least 1 link");
  std::vector<std::string> nodes = {"src", "dst"};
  std::vector<detail::LinkDef> links;
  for (int i = 0; i < m; ++i)
    links.push_back({"p" + std::to_string(i), "src", "dst"});
  Topology t{Network(nodes, links, power), {}};
  t.hosts = {t.network.node_index("src"), t.network.node_index("dst")};
  return t;
}

}  // namespace dcflow
