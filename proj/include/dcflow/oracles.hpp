#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcflow/dcfs.hpp"
#include "dcflow/energy.hpp"
#include "dcflow/network.hpp"
#include "dcflow/parallel.hpp"
#include "dcflow/paths.hpp"
#include "dcflow/rng.hpp"
#include "dcflow/schedule.hpp"

namespace dcflow {

// Ideal operating rate of a link: argmin of f(x)/x. Zero when sigma is zero
// (all-dynamic regime; any arbitrarily small rate is as efficient).
inline double r_opt(const PowerParams& p) {
  p.validate();
  if (p.sigma == 0.0) return 0.0;
  return std::pow(p.sigma / (p.mu * (p.alpha - 1.0)), 1.0 / p.alpha);
}

// Inapproximability constant 3/2 (1 + ((2/3)^alpha - 1) / alpha).
inline double inapprox_gamma(double alpha) {
  if (alpha <= 1.0) throw std::invalid_argument("inapprox_gamma: alpha must be > 1");
  return 1.5 * (1.0 + (std::pow(2.0 / 3.0, alpha) - 1.0) / alpha);
}

struct OracleResult {
  double objective = 0.0;
  std::vector<double> rates;             // per flow
  std::vector<std::vector<int>> paths;   // per flow
  std::string method;
  long evaluations = 0;
  double residual = 0.0;                 // worst constraint violation, <= 0 if feasible
};

struct SubsetConstraint {
  std::vector<int> flows;  // flow indices sharing a link
  double bound = 0.0;      // max deadline - min release over the subset
};

// Constraint system of the rate program: for every link and every interval
// [a,b] spanned by release/deadline values of its flows, the flows contained
// in [a,b] must fit into b - a. Interval-defined subsets dominate arbitrary
// subsets of J_e, because any subset is contained in the interval spanned by
// its own releases and deadlines, which carries the same bound and at least
// the same load.
inline std::vector<SubsetConstraint> p1_constraints(
    const Network& net, const std::vector<Flow>& flows,
    const std::vector<std::vector<int>>& paths) {
  LinkAssignment assignment = LinkAssignment::build(net, flows, paths);
  std::map<std::vector<int>, double> tightest;
  for (int e = 0; e < net.link_count(); ++e) {
    const auto& on_link = assignment.flows_on_link[static_cast<std::size_t>(e)];
    for (int ia : on_link) {
      double a = flows[static_cast<std::size_t>(ia)].release;
      for (int ib : on_link) {
        double b = flows[static_cast<std::size_t>(ib)].deadline;
        if (!(a < b)) continue;
        std::vector<int> subset;
        for (int i : on_link) {
          const Flow& f = flows[static_cast<std::size_t>(i)];
          if (f.release >= a && f.deadline <= b) subset.push_back(i);
        }
        if (subset.empty()) continue;
        std::sort(subset.begin(), subset.end());
        auto it = tightest.find(subset);
        if (it == tightest.end() || b - a < it->second) tightest[subset] = b - a;
      }
    }
  }
  std::vector<SubsetConstraint> out;
  out.reserve(tightest.size());
  for (auto& [subset, bound] : tightest) out.push_back({subset, bound});
  return out;
}

namespace detail {

struct P1Problem {
  std::vector<double> coeff;   // |P_i| * mu * w_i
  std::vector<double> volume;  // w_i
  std::vector<SubsetConstraint> constraints;
  double alpha = 2.0;

  double objective(const std::vector<double>& theta) const {
    double obj = 0.0;
    for (std::size_t i = 0; i < coeff.size(); ++i)
      obj += coeff[i] * std::exp((alpha - 1.0) * theta[i]);
    return obj;
  }

  // load(S) - bound, positive when violated
  double constraint(const std::vector<double>& theta, std::size_t m) const {
    double load = 0.0;
    for (int i : constraints[m].flows)
      load += volume[static_cast<std::size_t>(i)] * std::exp(-theta[static_cast<std::size_t>(i)]);
    return load - constraints[m].bound;
  }
};

// Augmented-Lagrangian value and gradient in log-rate space.
inline double p1_al_value(const P1Problem& p, const std::vector<double>& theta,
                          const std::vector<double>& lambda, double rho,
                          std::vector<double>* grad) {
  double val = p.objective(theta);
  if (grad) {
    grad->assign(theta.size(), 0.0);
    for (std::size_t i = 0; i < theta.size(); ++i)
      (*grad)[i] = (p.alpha - 1.0) * p.coeff[i] * std::exp((p.alpha - 1.0) * theta[i]);
  }
  for (std::size_t m = 0; m < p.constraints.size(); ++m) {
    double g = p.constraint(theta, m);
    double mult = lambda[m] + rho * g;
    if (mult > 0.0) {
      val += lambda[m] * g + 0.5 * rho * g * g;
      if (grad) {
        for (int i : p.constraints[m].flows) {
          auto ii = static_cast<std::size_t>(i);
          (*grad)[ii] += mult * (-p.volume[ii] * std::exp(-theta[ii]));
        }
      }
    } else {
      val -= lambda[m] * lambda[m] / (2.0 * rho);
    }
  }
  return val;
}

inline void p1_minimize_inner(const P1Problem& p, std::vector<double>& theta,
                              const std::vector<double>& lambda, double rho,
                              int iterations) {
  std::vector<double> grad, trial;
  double step = 0.1;
  double value = p1_al_value(p, theta, lambda, rho, &grad);
  for (int it = 0; it < iterations; ++it) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    if (norm2 < 1e-24 * std::max(1.0, value * value)) break;
    bool moved = false;
    for (int half = 0; half < 40; ++half) {
      trial = theta;
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] -= step * grad[i];
      double trial_value = p1_al_value(p, trial, lambda, rho, nullptr);
      if (trial_value <= value - 1e-4 * step * norm2) {
        theta = trial;
        value = p1_al_value(p, theta, lambda, rho, &grad);
        step *= 1.6;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
}

}  // namespace detail

struct OracleDcfsOptions {
  int restarts = 10;
  std::uint64_t seed = 1;
  int outer_iterations = 30;
  int inner_iterations = 400;
};

// Reference solver for the fixed-route rate program: minimize
// sum_i |P_i| mu w_i s_i^(alpha-1) subject to the per-link interval-subset
// packing constraints. Solved independently of the combinatorial scheduler by
// an augmented-Lagrangian gradient descent in log-rate space with multiple
// starts; the returned point is feasibility-repaired by uniform rate scaling.
inline OracleResult oracle_dcfs(const Network& net, const std::vector<Flow>& flows,
                                const std::vector<std::vector<int>>& paths,
                                const OracleDcfsOptions& options = {}) {
  if (flows.empty()) return {0.0, {}, paths, "p1-log-alm", 0, 0.0};
  detail::P1Problem problem;
  problem.alpha = net.power().alpha;
  problem.constraints = p1_constraints(net, flows, paths);
  problem.coeff.resize(flows.size());
  problem.volume.resize(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    problem.coeff[i] = static_cast<double>(paths[i].size()) * net.power().mu * flows[i].volume;
    problem.volume[i] = flows[i].volume;
  }

  OracleResult best;
  best.method = "p1-log-alm";
  best.paths = paths;
  best.objective = std::numeric_limits<double>::infinity();
  Rng rng(options.seed);

  for (int start = 0; start < options.restarts; ++start) {
    std::vector<double> theta(flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) {
      theta[i] = std::log(flows[i].density());
      if (start > 0) theta[i] += rng.uniform(-0.7, 0.7);
    }
    std::vector<double> lambda(problem.constraints.size(), 0.0);
    double rho = 4.0;
    double worst_violation = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < options.outer_iterations; ++outer) {
      detail::p1_minimize_inner(problem, theta, lambda, rho, options.inner_iterations);
      double worst = 0.0;
      for (std::size_t m = 0; m < problem.constraints.size(); ++m) {
        double g = problem.constraint(theta, m);
        lambda[m] = std::max(0.0, lambda[m] + rho * g);
        worst = std::max(worst, g);
      }
      best.evaluations += options.inner_iterations;
      if (worst < 1e-12) break;
      if (worst > 0.5 * worst_violation) rho = std::min(rho * 2.0, 1e10);
      worst_violation = std::min(worst_violation, worst);
    }

    // uniform scale-up clears any remaining violation exactly
    double factor = 1.0;
    for (std::size_t m = 0; m < problem.constraints.size(); ++m) {
      double load = problem.constraint(theta, m) + problem.constraints[m].bound;
      factor = std::max(factor, load / problem.constraints[m].bound);
    }
    if (factor > 1.0)
      for (double& t : theta) t += std::log(factor);

    double obj = problem.objective(theta);
    if (obj < best.objective) {
      best.objective = obj;
      best.rates.resize(flows.size());
      for (std::size_t i = 0; i < flows.size(); ++i) best.rates[i] = std::exp(theta[i]);
      best.residual = 0.0;
      for (std::size_t m = 0; m < problem.constraints.size(); ++m)
        best.residual = std::max(best.residual, problem.constraint(theta, m));
    }
  }
  if (!std::isfinite(best.objective))
    throw std::runtime_error("oracle_dcfs: no feasible point found");
  return best;
}

struct OracleDcfsrOptions {
  int max_hops = 8;
  std::size_t combination_budget = 100000;
  bool use_p1_oracle = false;  // rate solver per combination; default scheduler path
  unsigned threads = 0;
};

// Reference solver for joint routing and scheduling: enumerates every
// combination of simple paths, prices each with the fixed-route solver plus
// the idle term, skips combinations whose rates exceed capacity, and returns
// the cheapest. Refuses instances whose combination count exceeds the budget.
inline OracleResult oracle_dcfsr(const Network& net, const std::vector<Flow>& flows,
                                 const OracleDcfsrOptions& options = {}) {
  if (flows.empty()) return {0.0, {}, {}, "dcfsr-enumeration", 0, 0.0};
  std::vector<std::vector<std::vector<int>>> candidates(flows.size());
  double combos = 1.0;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    candidates[i] = enumerate_simple_paths(net, flows[i].src, flows[i].dst,
                                           options.max_hops, options.combination_budget);
    if (candidates[i].empty())
      throw std::runtime_error("oracle_dcfsr: flow " + flows[i].id +
                               " has no simple path");
    combos *= static_cast<double>(candidates[i].size());
    if (combos > static_cast<double>(options.combination_budget))
      throw std::runtime_error(
          "oracle_dcfsr: combination budget exceeded (" + std::to_string(combos) +
          " > " + std::to_string(options.combination_budget) + ")");
  }

  const std::size_t total = static_cast<std::size_t>(combos);
  std::vector<double> energy(total, std::numeric_limits<double>::infinity());
  std::vector<std::vector<double>> combo_rates(total);

  parallel_for(
      total,
      [&](std::size_t c) {
        std::vector<std::vector<int>> paths(flows.size());
        std::size_t rest = c;
        for (std::size_t i = 0; i < flows.size(); ++i) {
          paths[i] = candidates[i][rest % candidates[i].size()];
          rest /= candidates[i].size();
        }
        try {
          McfSchedule mcf = most_critical_first(net, flows, paths);
          if (!mcf.capacity_warnings.empty()) return;  // skip: rate above C
          if (options.use_p1_oracle) {
            OracleDcfsOptions o;
            o.restarts = 4;
            OracleResult r = oracle_dcfs(net, flows, paths, o);
            double horizon = horizon_end(flows) - horizon_begin(flows);
            energy[c] = r.objective +
                        net.power().sigma * horizon *
                            active_link_count(mcf.schedule, flows, net);
            combo_rates[c] = r.rates;
          } else {
            energy[c] = schedule_energy(mcf.schedule, flows, net);
            combo_rates[c] = mcf.rates;
          }
        } catch (const std::logic_error&) {
          // scheduling this combination failed; treat as unusable
        }
      },
      options.threads);

  std::size_t best = total;
  for (std::size_t c = 0; c < total; ++c)
    if (best == total || energy[c] < energy[best]) best = c;
  if (best == total || !std::isfinite(energy[best]))
    throw std::runtime_error("oracle_dcfsr: no capacity-feasible combination");

  OracleResult out;
  out.method = options.use_p1_oracle ? "dcfsr-enumeration-p1" : "dcfsr-enumeration";
  out.objective = energy[best];
  out.evaluations = static_cast<long>(total);
  out.rates = combo_rates[best];
  out.paths.resize(flows.size());
  std::size_t rest = best;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    out.paths[i] = candidates[i][rest % candidates[i].size()];
    rest /= candidates[i].size();
  }
  return out;
}

// Hop-count shortest-path routing (deterministic lexicographic tie-break)
// followed by the critical-interval scheduler.
inline McfSchedule shortest_path_baseline(const Network& net,
                                          const std::vector<Flow>& flows) {
  std::vector<std::vector<int>> paths(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    paths[i] = lex_shortest_path(net, flows[i].src, flows[i].dst);
    if (paths[i].empty())
      throw std::runtime_error("shortest_path_baseline: flow " + flows[i].id +
                               " endpoints " + net.node_name(flows[i].src) + " -> " +
                               net.node_name(flows[i].dst) + " are disconnected");
  }
  return most_critical_first(net, flows, paths);
}

}  // namespace dcflow
