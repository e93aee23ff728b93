#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dcflow {

// Power model of a link: f(0) = 0, f(x) = sigma + mu * x^alpha for 0 < x <= capacity.
struct PowerParams {
  double sigma = 0.0;     // idle power while the link is on
  double mu = 1.0;        // dynamic power scale
  double alpha = 2.0;     // dynamic power exponent, > 1
  double capacity = 1.0;  // maximum transmission rate C

  void validate() const {
    if (sigma < 0.0) throw std::invalid_argument("PowerParams: sigma must be >= 0");
    if (mu <= 0.0) throw std::invalid_argument("PowerParams: mu must be > 0");
    if (alpha <= 1.0) throw std::invalid_argument("PowerParams: alpha must be > 1");
    if (capacity <= 0.0) throw std::invalid_argument("PowerParams: capacity must be > 0");
  }
};

// Total power drawn by a link operating at rate x. Zero when the link is off.
inline double link_power(double x, const PowerParams& p) {
  if (x < 0.0 || x > p.capacity)
    throw std::domain_error("link_power: rate outside [0, capacity]");
  if (x == 0.0) return 0.0;
  return p.sigma + p.mu * std::pow(x, p.alpha);
}

// Dynamic component only, g(x) = mu * x^alpha. Defined for any x >= 0.
inline double dynamic_power(double x, const PowerParams& p) {
  if (x < 0.0) throw std::domain_error("dynamic_power: negative rate");
  if (x == 0.0) return 0.0;
  return p.mu * std::pow(x, p.alpha);
}

// Energy per unit of data when transmitting at rate x.
inline double power_rate(double x, const PowerParams& p) {
  return link_power(x, p) / x;
}

struct Link {
  std::string id;
  int u = -1;
  int v = -1;

  int other(int node) const { return node == u ? v : u; }
  bool touches(int node) const { return node == u || node == v; }
};

// Undirected network with uniform power parameters. Parallel links between
// the same node pair are allowed.
class Network {
 public:
  Network() = default;

  Network(std::vector<std::string> node_names,
          std::vector<std::tuple<std::string, std::string, std::string>> link_defs,
          PowerParams power)
      : power_(power) {
    power_.validate();
    nodes_.reserve(node_names.size());
    for (auto& name : node_names) {
      if (node_index_.count(name))
        throw std::invalid_argument("Network: duplicate node id '" + name + "'");
      node_index_[name] = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(name));
    }
    adjacency_.resize(nodes_.size());
    links_.reserve(link_defs.size());
    for (auto& [id, u_name, v_name] : link_defs) {
      if (link_index_.count(id))
        throw std::invalid_argument("Network: duplicate link id '" + id + "'");
      int u = node_index(u_name);
      int v = node_index(v_name);
      if (u == v)
        throw std::invalid_argument("Network: link '" + id + "' is a self-loop");
      int e = static_cast<int>(links_.size());
      link_index_[id] = e;
      links_.push_back(Link{id, u, v});
      adjacency_[static_cast<std::size_t>(u)].push_back({e, v});
      adjacency_[static_cast<std::size_t>(v)].push_back({e, u});
    }
  }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int link_count() const { return static_cast<int>(links_.size()); }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int e) const { return links_[static_cast<std::size_t>(e)]; }
  const std::string& node_name(int v) const { return nodes_[static_cast<std::size_t>(v)]; }
  const PowerParams& power() const { return power_; }

  int node_index(const std::string& name) const {
    auto it = node_index_.find(name);
    if (it == node_index_.end())
      throw std::invalid_argument("Network: unknown node '" + name + "'");
    return it->second;
  }

  int link_index(const std::string& id) const {
    auto it = link_index_.find(id);
    if (it == link_index_.end())
      throw std::invalid_argument("Network: unknown link '" + id + "'");
    return it->second;
  }

  bool has_node(const std::string& name) const { return node_index_.count(name) != 0; }
  bool has_link(const std::string& id) const { return link_index_.count(id) != 0; }

  // (link index, neighbor node) pairs incident to a node
  const std::vector<std::pair<int, int>>& adjacency(int node) const {
    return adjacency_[static_cast<std::size_t>(node)];
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Link> links_;
  PowerParams power_;
  std::unordered_map<std::string, int> node_index_;
  std::unordered_map<std::string, int> link_index_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

// A deadline-constrained flow: volume of data to move from src to dst
// within the span [release, deadline].
struct Flow {
  std::string id;
  double volume = 0.0;
  double release = 0.0;
  double deadline = 0.0;
  int src = -1;
  int dst = -1;

  double span_length() const { return deadline - release; }
  double density() const { return volume / span_length(); }

  void validate(const Network& net) const {
    if (volume <= 0.0) throw std::invalid_argument("Flow " + id + ": volume must be > 0");
    if (!(release < deadline))
      throw std::invalid_argument("Flow " + id + ": release must precede deadline");
    if (src == dst) throw std::invalid_argument("Flow " + id + ": src == dst");
    if (src < 0 || src >= net.node_count() || dst < 0 || dst >= net.node_count())
      throw std::invalid_argument("Flow " + id + ": endpoint outside node set");
  }
};

inline double horizon_begin(const std::vector<Flow>& flows) {
  double t = flows.empty() ? 0.0 : flows.front().release;
  for (const Flow& f : flows) t = std::min(t, f.release);
  return t;
}

// Note: the horizon end is the latest deadline, so [T0,T1] covers every span.
inline double horizon_end(const std::vector<Flow>& flows) {
  double t = flows.empty() ? 0.0 : flows.front().deadline;
  for (const Flow& f : flows) t = std::max(t, f.deadline);
  return t;
}

}  // namespace dcflow
