#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcflow/intervals.hpp"
#include "dcflow/network.hpp"
#include "dcflow/paths.hpp"

namespace dcflow {

struct FmcfOptions {
  int max_iterations = 5000;
  double objective_rel_change = 1e-7;  // stop on stalled objective
  double gap_rel_tol = 1e-10;          // stop once the bound is certified tight
  bool use_capacity_barrier = true;
  int polish_every = 20;  // pairwise path-equilibration cadence
};

// Raised when a commodity cannot be routed (disconnected endpoints) or the
// aggregate demand cannot fit under the link capacities.
class FmcfInfeasible : public std::runtime_error {
 public:
  FmcfInfeasible(const std::string& msg, std::vector<int> cut)
      : std::runtime_error(msg), cut_links(std::move(cut)) {}
  std::vector<int> cut_links;  // saturated or boundary links witnessing the cut
};

// Fractional routing of the flows active in one interval. Arc 2e carries
// u->v traffic of link e, arc 2e+1 the reverse direction; arc_flow is in
// rate units so y_{i,e} = (arc_flow[2e] + arc_flow[2e+1]) / D_i.
struct FmcfSolution {
  std::vector<int> commodities;                // flow indices, ascending
  std::vector<std::vector<double>> arc_flow;   // per commodity slot, size 2L
  std::vector<double> link_rate;               // x_e = sum of both directions
  double objective = 0.0;                      // sum_e g(x_e)
  double certified_bound = 0.0;                // lower bound on the optimum
  double relative_gap = 0.0;
  int iterations = 0;

  double fraction_on_link(std::size_t slot, int link, double demand) const {
    return (arc_flow[slot][static_cast<std::size_t>(2 * link)] +
            arc_flow[slot][static_cast<std::size_t>(2 * link) + 1]) /
           demand;
  }
};

namespace detail {

// integer exponents cover the common power models without libm calls
inline double pow_fast(double x, double a) {
  if (a == 1.0) return x;
  if (a == 2.0) return x * x;
  if (a == 3.0) return x * x * x;
  if (a == 4.0) {
    double s = x * x;
    return s * s;
  }
  return std::pow(x, a);
}

inline double g_cost(double x, const PowerParams& p) {
  return x <= 0.0 ? 0.0 : p.mu * pow_fast(x, p.alpha);
}

inline double g_marginal(double x, const PowerParams& p) {
  return x <= 0.0 ? 0.0 : p.mu * p.alpha * pow_fast(x, p.alpha - 1.0);
}

// Reciprocal capacity barrier, active above 0.95 C, linearly continued past
// 0.999 C so that iterates that overshoot the capacity stay finite.
struct Barrier {
  double cap = 0.0;
  double eps = 0.0;

  double lo() const { return 0.95 * cap; }
  double hi() const { return 0.999 * cap; }

  double derivative(double x) const {
    if (eps <= 0.0 || x <= lo()) return 0.0;
    double z = std::min(x, hi());
    return eps / ((cap - z) * (cap - z));
  }
};

// 1-D minimization of a convex restriction via bisection on its derivative.
template <typename Deriv>
inline double bisect_step(const Deriv& phi_prime, double hi_bound) {
  double lo = 0.0, hi = hi_bound;
  if (phi_prime(0.0) >= 0.0) return 0.0;
  if (phi_prime(hi_bound) <= 0.0) return hi_bound;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (phi_prime(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Arc sequence (src -> dst) of the tree path to dst.
inline std::vector<int> tree_arc_path(const Network& net, const ShortestPathTree& t,
                                      int dst) {
  std::vector<int> arcs;
  int at = dst;
  while (at != t.source) {
    int e = t.via_link[static_cast<std::size_t>(at)];
    int from = t.prev[static_cast<std::size_t>(at)];
    arcs.push_back(2 * e + (net.link(e).u == from ? 0 : 1));
    at = from;
  }
  std::reverse(arcs.begin(), arcs.end());
  return arcs;
}

// Path flows of one commodity (or one flow's (interval, path) atoms in the
// lower-bound program). Kept deduplicated by arc sequence.
struct AtomSet {
  std::vector<std::vector<int>> arcs;  // per atom
  std::vector<int> interval;           // per atom; -1 in single-interval use
  std::vector<double> flow;            // rate or work units
  std::map<std::pair<int, std::vector<int>>, std::size_t> index;

  std::size_t find_or_add(int k, const std::vector<int>& arc_path) {
    auto key = std::make_pair(k, arc_path);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    index.emplace(std::move(key), arcs.size());
    arcs.push_back(arc_path);
    interval.push_back(k);
    flow.push_back(0.0);
    return arcs.size() - 1;
  }

  void prune(double tol) {
    for (std::size_t a = 0; a < flow.size(); ++a) {
      if (flow[a] > tol || flow[a] == 0.0) continue;
      flow[a] = 0.0;  // keep the column; it may be reused later
    }
  }
};

}  // namespace detail

// Solves the fractional multi-commodity flow problem of one interval: route
// demand D_i between the endpoints of every active flow so that
// sum_e mu x_e^alpha is minimal, subject to x_e <= C (soft barrier during the
// iteration, hard-verified after). Frank-Wolfe over the path polytope: each
// round routes every commodity along a shortest path under the marginal link
// costs and line-searches the convex step; the generated paths are
// periodically equilibrated pairwise (exact 1-D transfers), which removes the
// zigzag stall. The duality gap certifies the returned bound.
inline FmcfSolution solve_fmcf(const Network& net, const std::vector<Flow>& flows,
                               const std::vector<int>& active,
                               const FmcfOptions& options = {}) {
  const PowerParams& power = net.power();
  if (power.alpha < 1.001)
    throw std::invalid_argument("solve_fmcf: alpha below 1.001 is not supported");
  const std::size_t links = static_cast<std::size_t>(net.link_count());
  const std::size_t arcs = 2 * links;

  FmcfSolution sol;
  sol.commodities = active;
  std::sort(sol.commodities.begin(), sol.commodities.end());
  sol.arc_flow.assign(sol.commodities.size(), std::vector<double>(arcs, 0.0));
  sol.link_rate.assign(links, 0.0);
  if (sol.commodities.empty()) return sol;

  const std::size_t n = sol.commodities.size();
  std::vector<double> demand(n);
  for (std::size_t s = 0; s < n; ++s)
    demand[s] = flows[static_cast<std::size_t>(sol.commodities[s])].density();

  std::vector<detail::AtomSet> atom(n);
  std::vector<double>& x = sol.link_rate;

  // greedy sequential start: each commodity on its incremental-cost path
  std::vector<double> weight(links), weight_pure(links);
  for (std::size_t s = 0; s < n; ++s) {
    const Flow& f = flows[static_cast<std::size_t>(sol.commodities[s])];
    for (std::size_t e = 0; e < links; ++e)
      weight[e] = detail::g_cost(x[e] + demand[s], power) - detail::g_cost(x[e], power);
    ShortestPathTree tree = dijkstra(net, f.src, weight);
    if (!tree.reached(f.dst)) {
      std::vector<int> cut;
      for (std::size_t e = 0; e < links; ++e) {
        const Link& l = net.link(static_cast<int>(e));
        if (tree.reached(l.u) != tree.reached(l.v)) cut.push_back(static_cast<int>(e));
      }
      throw FmcfInfeasible("solve_fmcf: flow " + f.id + " endpoints " +
                               net.node_name(f.src) + " -> " + net.node_name(f.dst) +
                               " are disconnected",
                           cut);
    }
    std::size_t a = atom[s].find_or_add(-1, detail::tree_arc_path(net, tree, f.dst));
    atom[s].flow[a] = demand[s];
    for (int arc : atom[s].arcs[a]) x[static_cast<std::size_t>(arc / 2)] += demand[s];
  }

  detail::Barrier barrier;
  barrier.cap = power.capacity;
  const double barrier_eps0 =
      options.use_capacity_barrier
          ? 1e-5 * power.mu * std::pow(power.capacity, power.alpha + 1.0)
          : 0.0;

  auto objective = [&]() {
    double obj = 0.0;
    for (std::size_t e = 0; e < links; ++e) obj += detail::g_cost(x[e], power);
    return obj;
  };
  auto cost_marginal = [&](double load) {
    return detail::g_marginal(load, power) + barrier.derivative(load);
  };

  // exact pairwise transfers between each commodity's dearest and cheapest
  // generated paths; repeats until marginal path costs agree
  auto equilibrate = [&](int sweeps) {
    std::vector<double> coef(links, 0.0);
    for (int round = 0; round < sweeps; ++round) {
      bool moved = false;
      for (std::size_t s = 0; s < n; ++s) {
        for (int inner = 0; inner < 8; ++inner) {
          double c_hi = -1.0, c_lo = std::numeric_limits<double>::infinity();
          std::size_t hi = 0, lo = 0;
          for (std::size_t a = 0; a < atom[s].arcs.size(); ++a) {
            double c = 0.0;
            for (int arc : atom[s].arcs[a])
              c += cost_marginal(x[static_cast<std::size_t>(arc / 2)]);
            if (c < c_lo) {
              c_lo = c;
              lo = a;
            }
            if (atom[s].flow[a] > 1e-14 * demand[s] && c > c_hi) {
              c_hi = c;
              hi = a;
            }
          }
          if (hi == lo || c_hi - c_lo <= 1e-12 * std::max(1.0, c_hi)) break;
          std::vector<int> touched;
          for (int arc : atom[s].arcs[lo]) {
            auto e = static_cast<std::size_t>(arc / 2);
            if (coef[e] == 0.0) touched.push_back(static_cast<int>(e));
            coef[e] += 1.0;
          }
          for (int arc : atom[s].arcs[hi]) {
            auto e = static_cast<std::size_t>(arc / 2);
            if (coef[e] == 0.0) touched.push_back(static_cast<int>(e));
            coef[e] -= 1.0;
          }
          auto phi_prime = [&](double t) {
            double d = 0.0;
            for (int e : touched) {
              auto ei = static_cast<std::size_t>(e);
              if (coef[ei] != 0.0) d += coef[ei] * cost_marginal(x[ei] + coef[ei] * t);
            }
            return d;
          };
          double t = detail::bisect_step(phi_prime, atom[s].flow[hi]);
          if (t > 0.0) {
            atom[s].flow[hi] -= t;
            atom[s].flow[lo] += t;
            for (int e : touched) x[static_cast<std::size_t>(e)] += coef[static_cast<std::size_t>(e)] * t;
            moved = true;
          }
          for (int e : touched) coef[static_cast<std::size_t>(e)] = 0.0;
          if (t <= 0.0) break;
        }
      }
      if (!moved) break;
    }
  };

  double previous_objective = objective();
  std::vector<double> delta(links);
  std::vector<std::size_t> target(n);

  // static source set; tree buffers reused every iteration
  std::vector<int> sources;
  std::vector<std::size_t> source_slot(n);
  for (std::size_t s = 0; s < n; ++s) {
    int src = flows[static_cast<std::size_t>(sol.commodities[s])].src;
    std::size_t slot = 0;
    while (slot < sources.size() && sources[slot] != src) ++slot;
    if (slot == sources.size()) sources.push_back(src);
    source_slot[s] = slot;
  }
  std::vector<ShortestPathTree> trees(sources.size()), trees_pure(sources.size());

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    barrier.eps = barrier_eps0 / (1.0 + iter / 50.0);
    bool barrier_active = false;
    for (std::size_t e = 0; e < links; ++e) {
      weight_pure[e] = detail::g_marginal(x[e], power);
      weight[e] = weight_pure[e] + barrier.derivative(x[e]);
      if (weight[e] != weight_pure[e]) barrier_active = true;
    }

    for (std::size_t s = 0; s < sources.size(); ++s) {
      dijkstra_into(net, sources[s], weight, trees[s]);
      if (barrier_active) dijkstra_into(net, sources[s], weight_pure, trees_pure[s]);
    }
    double gap_flow_term = 0.0;  // sum_i D_i * pure shortest-path cost
    for (std::size_t s = 0; s < n; ++s) {
      const Flow& f = flows[static_cast<std::size_t>(sol.commodities[s])];
      const ShortestPathTree& tree = trees[source_slot[s]];
      target[s] = atom[s].find_or_add(-1, detail::tree_arc_path(net, tree, f.dst));
      const ShortestPathTree& pure = barrier_active ? trees_pure[source_slot[s]] : tree;
      gap_flow_term += demand[s] * pure.dist[static_cast<std::size_t>(f.dst)];
    }

    double linear_at_current = 0.0;
    for (std::size_t e = 0; e < links; ++e) linear_at_current += weight_pure[e] * x[e];
    double gap = linear_at_current - gap_flow_term;
    sol.objective = objective();
    sol.certified_bound =
        std::max(sol.certified_bound, sol.objective - std::max(gap, 0.0));
    sol.relative_gap = gap / std::max(sol.objective, 1e-300);
    sol.iterations = iter;
    if (sol.relative_gap <= options.gap_rel_tol) break;

    // Frank-Wolfe direction: all-or-nothing onto the target paths
    std::fill(delta.begin(), delta.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (int arc : atom[s].arcs[target[s]])
        delta[static_cast<std::size_t>(arc / 2)] += demand[s];
    for (std::size_t e = 0; e < links; ++e) delta[e] -= x[e];

    auto phi_prime = [&](double gamma) {
      double d = 0.0;
      for (std::size_t e = 0; e < links; ++e)
        if (delta[e] != 0.0) d += delta[e] * cost_marginal(x[e] + gamma * delta[e]);
      return d;
    };
    double gamma = detail::bisect_step(phi_prime, 1.0);
    if (gamma > 0.0) {
      for (std::size_t s = 0; s < n; ++s) {
        for (double& fflow : atom[s].flow) fflow *= 1.0 - gamma;
        atom[s].flow[target[s]] += gamma * demand[s];
      }
      for (std::size_t e = 0; e < links; ++e)
        x[e] = std::max(0.0, x[e] + gamma * delta[e]);
    }

    if (gamma == 0.0 || iter % options.polish_every == 0) equilibrate(6);

    double obj = objective();
    double change = std::abs(previous_objective - obj) / std::max(obj, 1e-300);
    previous_objective = obj;
    if (iter > 3 && change < options.objective_rel_change && gamma > 0.0 &&
        iter % options.polish_every != 0)
      continue;  // cheap iterations keep running until a polish pass confirms
    if (iter > 3 && change < options.objective_rel_change) break;
  }
  equilibrate(12);

  // final certificate after the last polish
  {
    for (std::size_t e = 0; e < links; ++e)
      weight_pure[e] = detail::g_marginal(x[e], power);
    for (std::size_t s = 0; s < sources.size(); ++s)
      dijkstra_into(net, sources[s], weight_pure, trees_pure[s]);
    double gap_flow_term = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const Flow& f = flows[static_cast<std::size_t>(sol.commodities[s])];
      gap_flow_term +=
          demand[s] * trees_pure[source_slot[s]].dist[static_cast<std::size_t>(f.dst)];
    }
    double linear_at_current = 0.0;
    for (std::size_t e = 0; e < links; ++e) linear_at_current += weight_pure[e] * x[e];
    double gap = std::max(0.0, linear_at_current - gap_flow_term);
    sol.objective = objective();
    sol.certified_bound = std::max(sol.certified_bound, sol.objective - gap);
    sol.relative_gap = gap / std::max(sol.objective, 1e-300);
  }

  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (double f : atom[s].flow) total += f;
    double fix = demand[s] / total;  // repair accumulated multiplicative drift
    for (std::size_t a = 0; a < atom[s].arcs.size(); ++a) {
      double f = atom[s].flow[a] * fix;
      if (f <= 0.0) continue;
      for (int arc : atom[s].arcs[a]) sol.arc_flow[s][static_cast<std::size_t>(arc)] += f;
    }
  }
  for (std::size_t e = 0; e < links; ++e) {
    x[e] = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      x[e] += sol.arc_flow[s][2 * e] + sol.arc_flow[s][2 * e + 1];
  }
  sol.objective = objective();

  double cap_tol = 1e-9 * power.capacity;
  std::vector<int> saturated;
  for (std::size_t e = 0; e < links; ++e)
    if (x[e] > power.capacity + cap_tol) saturated.push_back(static_cast<int>(e));
  if (!saturated.empty())
    throw FmcfInfeasible(
        "solve_fmcf: aggregate demand exceeds capacity on " +
            std::to_string(saturated.size()) + " link(s), first " +
            net.link(saturated.front()).id,
        saturated);
  return sol;
}

struct LowerBoundOptions {
  // the bound is certified at any iteration count; the cap trades tightness
  // (~0.3% at desk scale) for time
  int max_iterations = 400;
  double gap_rel_tol = 1e-6;
  double objective_rel_change = 1e-9;
  double active_link_tol = 1e-9;
  int polish_every = 10;
  int stall_window = 60;  // stop when the certified bound stops improving
};

struct LowerBoundResult {
  double value = 0.0;           // certified dynamic bound plus relaxed idle term
  double dynamic_bound = 0.0;   // certified lower bound on the relaxed dynamic energy
  double dynamic_primal = 0.0;  // objective at the final iterate (>= dynamic_bound)
  double idle_part = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  std::vector<std::vector<double>> link_rate;  // [interval][link]
};

// Fractional lower bound on the energy of any feasible single-path schedule.
// Relaxation: flows may split across paths, may distribute their work freely
// over the intervals of their span (each interval transmits at a constant
// rate), and links power on and off per interval. The dynamic part is the
// joint convex program min sum_k |I_k| sum_e g(x_e(k)) over those work
// distributions, solved by Frank-Wolfe over (interval, path) columns with
// pairwise equilibration; the reported bound subtracts the duality gap, so it
// is a true lower bound regardless of convergence. The idle part charges
// sigma per interval for every link the relaxed solution uses.
inline LowerBoundResult fractional_lower_bound(const Network& net,
                                               const std::vector<Flow>& flows,
                                               const IntervalStructure& intervals,
                                               const LowerBoundOptions& options = {}) {
  const PowerParams& power = net.power();
  if (power.alpha < 1.001)
    throw std::invalid_argument("fractional_lower_bound: alpha below 1.001");
  LowerBoundResult res;
  if (flows.empty()) return res;

  const std::size_t links = static_cast<std::size_t>(net.link_count());
  const std::size_t k_count = static_cast<std::size_t>(intervals.count());
  res.link_rate.assign(k_count, std::vector<double>(links, 0.0));
  auto& x = res.link_rate;

  std::vector<detail::AtomSet> atom(flows.size());  // work units per column

  // start: hop-shortest path, work spread uniformly over the span
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const Flow& f = flows[i];
    std::vector<int> sp = lex_shortest_path(net, f.src, f.dst);
    if (sp.empty())
      throw FmcfInfeasible(
          "fractional_lower_bound: flow " + f.id + " endpoints are disconnected", {});
    // orient into arcs by walking from the source
    std::vector<int> arcs;
    int at = f.src;
    for (int e : sp) {
      const Link& l = net.link(e);
      arcs.push_back(2 * e + (l.u == at ? 0 : 1));
      at = l.other(at);
    }
    for (int k : intervals.of_flow[i]) {
      std::size_t a = atom[i].find_or_add(k, arcs);
      double work = f.density() * intervals.length[static_cast<std::size_t>(k)];
      atom[i].flow[a] = work;
      for (int arc : arcs)
        x[static_cast<std::size_t>(k)][static_cast<std::size_t>(arc / 2)] +=
            work / intervals.length[static_cast<std::size_t>(k)];
    }
  }

  auto objective = [&]() {
    double obj = 0.0;
    for (std::size_t k = 0; k < k_count; ++k)
      for (std::size_t e = 0; e < links; ++e)
        obj += intervals.length[k] * detail::g_cost(x[k][e], power);
    return obj;
  };

  // marginal cost of one unit of work on column (k, P): sum of g'(x) on its
  // links; the interval length cancels against the work-to-rate conversion
  auto column_cost = [&](const detail::AtomSet& set, std::size_t a) {
    double c = 0.0;
    auto k = static_cast<std::size_t>(set.interval[a]);
    for (int arc : set.arcs[a]) c += detail::g_marginal(x[k][static_cast<std::size_t>(arc / 2)], power);
    return c;
  };

  auto equilibrate = [&](int sweeps) {
    std::map<std::pair<int, int>, double> coef;  // (interval, link) -> dx/dt
    for (int round = 0; round < sweeps; ++round) {
      bool moved = false;
      for (std::size_t i = 0; i < flows.size(); ++i) {
        for (int inner = 0; inner < 8; ++inner) {
          double c_hi = -1.0, c_lo = std::numeric_limits<double>::infinity();
          std::size_t hi = 0, lo = 0;
          for (std::size_t a = 0; a < atom[i].arcs.size(); ++a) {
            double c = column_cost(atom[i], a);
            if (c < c_lo) {
              c_lo = c;
              lo = a;
            }
            if (atom[i].flow[a] > 1e-14 * flows[i].volume && c > c_hi) {
              c_hi = c;
              hi = a;
            }
          }
          if (hi == lo || c_hi - c_lo <= 1e-12 * std::max(1.0, c_hi)) break;
          coef.clear();
          double len_lo = intervals.length[static_cast<std::size_t>(atom[i].interval[lo])];
          double len_hi = intervals.length[static_cast<std::size_t>(atom[i].interval[hi])];
          for (int arc : atom[i].arcs[lo])
            coef[{atom[i].interval[lo], arc / 2}] += 1.0 / len_lo;
          for (int arc : atom[i].arcs[hi])
            coef[{atom[i].interval[hi], arc / 2}] -= 1.0 / len_hi;
          auto phi_prime = [&](double t) {
            double d = 0.0;
            for (auto& [ke, rate] : coef) {
              if (rate == 0.0) continue;
              auto k = static_cast<std::size_t>(ke.first);
              double load = x[k][static_cast<std::size_t>(ke.second)] + rate * t;
              d += intervals.length[k] * rate * detail::g_marginal(load, power);
            }
            return d;
          };
          double t = detail::bisect_step(phi_prime, atom[i].flow[hi]);
          if (t > 0.0) {
            atom[i].flow[hi] -= t;
            atom[i].flow[lo] += t;
            for (auto& [ke, rate] : coef)
              x[static_cast<std::size_t>(ke.first)][static_cast<std::size_t>(ke.second)] =
                  std::max(0.0, x[static_cast<std::size_t>(ke.first)]
                                 [static_cast<std::size_t>(ke.second)] +
                                    rate * t);
            moved = true;
          } else {
            break;
          }
        }
      }
      if (!moved) break;
    }
  };

  std::vector<double> weight(links);

  // static per-interval source sets; tree buffers are reused every iteration
  std::vector<std::vector<int>> sources(k_count);
  std::vector<std::vector<std::size_t>> source_slot(k_count);  // per active flow
  for (std::size_t k = 0; k < k_count; ++k) {
    for (int i : intervals.active[k]) {
      int src = flows[static_cast<std::size_t>(i)].src;
      std::size_t slot = 0;
      while (slot < sources[k].size() && sources[k][slot] != src) ++slot;
      if (slot == sources[k].size()) sources[k].push_back(src);
      source_slot[k].push_back(slot);
    }
  }
  std::vector<std::vector<ShortestPathTree>> trees(k_count);
  for (std::size_t k = 0; k < k_count; ++k) trees[k].resize(sources[k].size());
  auto tree_of = [&](std::size_t k, int flow_index) -> const ShortestPathTree& {
    const auto& act = intervals.active[k];
    std::size_t pos = 0;
    while (act[pos] != flow_index) ++pos;
    return trees[k][source_slot[k][pos]];
  };
  auto refresh_trees = [&]() {
    double linear_at_current = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      for (std::size_t e = 0; e < links; ++e) {
        weight[e] = detail::g_marginal(x[k][e], power);
        linear_at_current += weight[e] * x[k][e] * intervals.length[k];
      }
      for (std::size_t s = 0; s < sources[k].size(); ++s)
        dijkstra_into(net, sources[k][s], weight, trees[k][s]);
    }
    return linear_at_current;
  };

  double best_bound = 0.0;
  int last_improvement = 0;
  double previous_objective = objective();
  std::vector<std::vector<double>> atom_x;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    double linear_at_current = refresh_trees();

    atom_x.assign(k_count, std::vector<double>(links, 0.0));
    double linear_at_atom = 0.0;
    std::vector<std::size_t> target(flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const Flow& f = flows[i];
      int best_k = -1;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int k : intervals.of_flow[i]) {
        double c = tree_of(static_cast<std::size_t>(k), static_cast<int>(i))
                       .dist[static_cast<std::size_t>(f.dst)];
        if (c < best_cost) {
          best_cost = c;
          best_k = k;
        }
      }
      linear_at_atom += f.volume * best_cost;
      const auto& tree = tree_of(static_cast<std::size_t>(best_k), static_cast<int>(i));
      std::vector<int> arcs = detail::tree_arc_path(net, tree, f.dst);
      target[i] = atom[i].find_or_add(best_k, arcs);
      double rate = f.volume / intervals.length[static_cast<std::size_t>(best_k)];
      for (int arc : arcs)
        atom_x[static_cast<std::size_t>(best_k)][static_cast<std::size_t>(arc / 2)] += rate;
    }

    double obj = objective();
    double gap = linear_at_current - linear_at_atom;
    double improved = obj - std::max(gap, 0.0) - best_bound;
    if (improved > 1e-7 * std::max(1.0, best_bound)) {
      best_bound += improved;
      last_improvement = iter;
    }
    res.relative_gap = gap / std::max(obj, 1e-300);
    res.iterations = iter;
    if (res.relative_gap <= options.gap_rel_tol) break;
    if (iter - last_improvement >= options.stall_window) break;

    auto phi_prime = [&](double gamma) {
      double d = 0.0;
      for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t e = 0; e < links; ++e) {
          double step = atom_x[k][e] - x[k][e];
          if (step == 0.0) continue;
          d += intervals.length[k] * step *
               detail::g_marginal(x[k][e] + gamma * step, power);
        }
      return d;
    };
    double gamma = detail::bisect_step(phi_prime, 1.0);
    if (gamma > 0.0) {
      for (std::size_t i = 0; i < flows.size(); ++i) {
        for (double& w : atom[i].flow) w *= 1.0 - gamma;
        atom[i].flow[target[i]] += gamma * flows[i].volume;
      }
      for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t e = 0; e < links; ++e)
          x[k][e] = std::max(0.0, x[k][e] + gamma * (atom_x[k][e] - x[k][e]));
    }
    if (gamma == 0.0 || iter % options.polish_every == 0) equilibrate(4);

    double new_obj = objective();
    double change = std::abs(previous_objective - new_obj) / std::max(new_obj, 1e-300);
    previous_objective = new_obj;
    if (iter > 10 && change < options.objective_rel_change &&
        iter % options.polish_every == 0)
      break;
  }
  equilibrate(8);

  // final certificate on the polished point
  {
    double linear_at_current = refresh_trees();
    double linear_at_atom = 0.0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const Flow& f = flows[i];
      double best_cost = std::numeric_limits<double>::infinity();
      for (int k : intervals.of_flow[i])
        best_cost = std::min(best_cost,
                             tree_of(static_cast<std::size_t>(k), static_cast<int>(i))
                                 .dist[static_cast<std::size_t>(f.dst)]);
      linear_at_atom += f.volume * best_cost;
    }
    double obj = objective();
    double gap = std::max(0.0, linear_at_current - linear_at_atom);
    best_bound = std::max(best_bound, obj - gap);
    res.relative_gap = gap / std::max(obj, 1e-300);
  }

  res.dynamic_primal = objective();
  res.dynamic_bound = std::min(best_bound, res.dynamic_primal);
  if (power.sigma > 0.0) {
    for (std::size_t k = 0; k < k_count; ++k) {
      int used = 0;
      for (std::size_t e = 0; e < links; ++e)
        if (x[k][e] > options.active_link_tol) ++used;
      res.idle_part += power.sigma * intervals.length[k] * used;
    }
  }
  res.value = res.dynamic_bound + res.idle_part;
  return res;
}

}  // namespace dcflow
