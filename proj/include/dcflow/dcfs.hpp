#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcflow/availability.hpp"
#include "dcflow/network.hpp"
#include "dcflow/schedule.hpp"

namespace dcflow {

// Fixed routing of every flow plus the derived quantities the critical-interval
// scheduler works with: virtual weights w'_i = w_i * |P_i|^(1/alpha) and the
// per-link flow sets J_e.
struct LinkAssignment {
  std::vector<std::vector<int>> paths;          // per flow
  std::vector<double> virtual_weight;           // per flow
  std::vector<std::vector<int>> flows_on_link;  // per link: flow indices

  static LinkAssignment build(const Network& net, const std::vector<Flow>& flows,
                              const std::vector<std::vector<int>>& paths) {
    if (paths.size() != flows.size())
      throw std::invalid_argument("LinkAssignment: one path per flow required");
    LinkAssignment a;
    a.paths = paths;
    a.virtual_weight.resize(flows.size());
    a.flows_on_link.resize(static_cast<std::size_t>(net.link_count()));
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const Flow& f = flows[i];
      f.validate(net);
      if (!path_connects(net, paths[i], f.src, f.dst))
        throw std::invalid_argument("LinkAssignment: flow " + f.id +
                                    " has no valid path");
      a.virtual_weight[i] =
          f.volume * std::pow(static_cast<double>(paths[i].size()), 1.0 / net.power().alpha);
      for (int e : paths[i])
        a.flows_on_link[static_cast<std::size_t>(e)].push_back(static_cast<int>(i));
    }
    return a;
  }
};

struct CriticalInterval {
  double begin = 0.0;
  double end = 0.0;
  int link = -1;
  std::vector<int> flow_set;   // J*: flows on `link` with span inside [begin, end]
  double intensity = 0.0;      // sum of virtual weights / available time
  double available = 0.0;      // unclaimed time within [begin, end] on `link`
  std::vector<int> overlapped; // flows scheduled at density on top of claims
  bool squeezed = false;       // group intensity escalated to fit prior claims
};

// Deadline-ascending order; ties by release time, then flow id.
inline std::vector<int> edf_order(const std::vector<Flow>& flows,
                                  std::vector<int> subset) {
  std::sort(subset.begin(), subset.end(), [&flows](int a, int b) {
    const Flow& fa = flows[static_cast<std::size_t>(a)];
    const Flow& fb = flows[static_cast<std::size_t>(b)];
    if (fa.deadline != fb.deadline) return fa.deadline < fb.deadline;
    if (fa.release != fb.release) return fa.release < fb.release;
    return fa.id < fb.id;
  });
  return subset;
}

inline std::vector<int> edf_order(const std::vector<Flow>& flows) {
  std::vector<int> all(flows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return edf_order(flows, std::move(all));
}

// Intensity of [a,b] on a link: total virtual weight of unscheduled flows on
// the link whose span lies inside [a,b], divided by the link's unclaimed time
// within [a,b]. Returns 0 with no such flow, +infinity when flows exist but
// no time is left (infeasibility signal for the caller).
inline double interval_intensity(double a, double b, int link,
                                 const LinkAssignment& assignment,
                                 const std::vector<Flow>& flows,
                                 const std::vector<char>& scheduled,
                                 const Availability& availability) {
  if (!(a < b)) return 0.0;
  double weight = 0.0;
  for (int i : assignment.flows_on_link[static_cast<std::size_t>(link)]) {
    if (scheduled[static_cast<std::size_t>(i)]) continue;
    const Flow& f = flows[static_cast<std::size_t>(i)];
    if (f.release >= a && f.deadline <= b) weight += assignment.virtual_weight[i];
  }
  if (weight <= 0.0) return 0.0;
  double avail = availability.free_time(link, a, b);
  if (avail <= 1e-12) return std::numeric_limits<double>::infinity();
  return weight / avail;
}

namespace detail {

struct Candidate {
  double intensity = -1.0;
  double length = 0.0;
  int link = -1;
  double a = 0.0, b = 0.0;
  double available = 0.0;

  // max intensity first; ties by shorter interval, then link id, then start
  bool better_than(const Candidate& o, const Network& net) const {
    if (o.link < 0) return true;
    double hi = std::max(intensity, o.intensity);
    bool tied = std::isinf(intensity) ? std::isinf(o.intensity)
                                      : std::abs(intensity - o.intensity) <= 1e-12 * hi;
    if (!tied) return intensity > o.intensity;
    if (length != o.length) return length < o.length;
    if (link != o.link) return net.link(link).id < net.link(o.link).id;
    return a < o.a;
  }
};

}  // namespace detail

// Scans all (interval, link) candidates whose endpoints are release/deadline
// values of unscheduled flows on the link, and returns the one of maximal
// intensity, shrunk to the hull of its flow set. Empty when nothing remains.
inline std::optional<CriticalInterval> find_critical_interval(
    const Network& net, const std::vector<Flow>& flows,
    const LinkAssignment& assignment, const std::vector<char>& scheduled,
    const Availability& availability) {
  detail::Candidate best;
  struct Item {
    double r, d, w;
  };
  std::vector<Item> items;
  std::vector<double> releases;
  for (int e = 0; e < net.link_count(); ++e) {
    items.clear();
    releases.clear();
    for (int i : assignment.flows_on_link[static_cast<std::size_t>(e)]) {
      if (scheduled[static_cast<std::size_t>(i)]) continue;
      const Flow& f = flows[static_cast<std::size_t>(i)];
      items.push_back({f.release, f.deadline, assignment.virtual_weight[i]});
      releases.push_back(f.release);
    }
    if (items.empty()) continue;
    std::sort(items.begin(), items.end(),
              [](const Item& x, const Item& y) { return x.d < y.d; });
    std::sort(releases.begin(), releases.end());
    releases.erase(std::unique(releases.begin(), releases.end()), releases.end());

    for (double a : releases) {
      double weight = 0.0;
      for (std::size_t j = 0; j < items.size(); ++j) {
        if (items[j].r >= a) weight += items[j].w;
        double b = items[j].d;
        if (j + 1 < items.size() && items[j + 1].d == b)
          continue;  // extend to the last flow sharing this deadline
        if (weight <= 0.0) continue;
        double avail = availability.free_time(e, a, b);
        detail::Candidate cand;
        cand.intensity = avail <= 1e-12 ? std::numeric_limits<double>::infinity()
                                        : weight / avail;
        cand.length = b - a;
        cand.link = e;
        cand.a = a;
        cand.b = b;
        cand.available = avail;
        if (cand.better_than(best, net)) best = cand;
      }
    }
  }
  if (best.link < 0) return std::nullopt;

  CriticalInterval ci;
  ci.link = best.link;
  // shrink to the hull of the contained flows; the flow set is unchanged and
  // the available time can only drop, so the interval stays critical
  double hull_a = best.b, hull_b = best.a;
  for (int i : assignment.flows_on_link[static_cast<std::size_t>(best.link)]) {
    if (scheduled[static_cast<std::size_t>(i)]) continue;
    const Flow& f = flows[static_cast<std::size_t>(i)];
    if (f.release >= best.a && f.deadline <= best.b) {
      ci.flow_set.push_back(i);
      hull_a = std::min(hull_a, f.release);
      hull_b = std::max(hull_b, f.deadline);
    }
  }
  ci.begin = hull_a;
  ci.end = hull_b;
  ci.available = availability.free_time(best.link, hull_a, hull_b);
  double weight = 0.0;
  for (int i : ci.flow_set) weight += assignment.virtual_weight[i];
  ci.intensity = ci.available <= 1e-12 ? std::numeric_limits<double>::infinity()
                                       : weight / ci.available;
  ci.flow_set = edf_order(flows, std::move(ci.flow_set));
  return ci;
}

namespace detail {

struct Placement {
  std::vector<std::vector<std::pair<double, double>>> segments;  // per J* slot
  std::vector<char> completed;                                   // per J* slot
};

// Preemptive earliest-deadline-first placement of a critical interval's flows
// into the free gaps of the critical link. A flow may only transmit while
// every other link of its path is also unclaimed (a transmitting flow
// occupies its whole path), so each flow carries its own blocked set. Flows
// that cannot finish by their deadline under these constraints are reported
// as incomplete; the caller escalates the group intensity or falls back.
inline Placement edf_place(const std::vector<Flow>& flows,
                           const std::vector<int>& edf_flows,
                           const std::vector<double>& duration,
                           const std::vector<std::pair<double, double>>& gaps,
                           const std::vector<std::vector<int>>& paths,
                           int critical_link, const Availability& availability) {
  Placement out;
  out.segments.resize(edf_flows.size());
  out.completed.assign(edf_flows.size(), 0);
  std::vector<double> remaining = duration;
  double scale = 0.0;
  for (double d : duration) scale += d;
  const double done_eps = 1e-12 * std::max(1.0, scale);

  // per flow: claimed time on the other links of its path, merged and sorted
  std::vector<std::vector<std::pair<double, double>>> blocked(edf_flows.size());
  for (std::size_t j = 0; j < edf_flows.size(); ++j) {
    Availability merge(1);
    for (int e : paths[static_cast<std::size_t>(edf_flows[j])]) {
      if (e == critical_link) continue;
      for (const auto& iv : availability.busy_intervals(e))
        merge.mark_busy(0, iv.first, iv.second);
    }
    blocked[j] = merge.busy_intervals(0);
  }
  auto blocked_until = [&](std::size_t j, double t) -> double {
    // returns t when free at t, otherwise the end of the blocking interval
    for (const auto& iv : blocked[j])
      if (iv.first <= t + 1e-12 && t < iv.second - 1e-12) return iv.second;
    return t;
  };
  auto next_block_start = [&](std::size_t j, double t) -> double {
    for (const auto& iv : blocked[j])
      if (iv.first > t + 1e-12) return iv.first;
    return std::numeric_limits<double>::infinity();
  };

  for (const auto& gap : gaps) {
    double t = gap.first;
    while (t < gap.second - 1e-12 * std::max(1.0, std::abs(gap.second))) {
      int run = -1;  // edf_flows is deadline-ordered, first runnable wins
      for (std::size_t j = 0; j < edf_flows.size(); ++j) {
        const Flow& f = flows[static_cast<std::size_t>(edf_flows[j])];
        if (remaining[j] <= done_eps) continue;
        if (f.release > t + 1e-12 || t >= f.deadline - 1e-12) continue;
        if (blocked_until(j, t) > t) continue;
        run = static_cast<int>(j);
        break;
      }
      if (run < 0) {
        // idle: jump to the next release or unblock of an unfinished flow
        double next = gap.second;
        for (std::size_t j = 0; j < edf_flows.size(); ++j) {
          if (remaining[j] <= done_eps) continue;
          const Flow& f = flows[static_cast<std::size_t>(edf_flows[j])];
          if (f.release > t + 1e-12) next = std::min(next, f.release);
          double unblock = blocked_until(j, t);
          if (unblock > t && unblock < f.deadline) next = std::min(next, unblock);
        }
        if (next <= t + 1e-15) break;
        t = next;
        continue;
      }
      auto rj = static_cast<std::size_t>(run);
      const Flow& running = flows[static_cast<std::size_t>(edf_flows[rj])];
      double stop = std::min({gap.second, t + remaining[rj], running.deadline,
                              next_block_start(rj, t)});
      // a release or unblock of an earlier-deadline flow preempts
      for (std::size_t j = 0; j < rj; ++j) {
        if (remaining[j] <= done_eps) continue;
        const Flow& f = flows[static_cast<std::size_t>(edf_flows[j])];
        if (f.release > t && f.release < stop) stop = std::min(stop, f.release);
        double unblock = blocked_until(j, std::max(t, f.release));
        if (unblock > t && unblock < stop) stop = std::min(stop, unblock);
      }
      if (stop <= t) break;
      auto& segs = out.segments[rj];
      if (!segs.empty() && std::abs(segs.back().second - t) <= 1e-12)
        segs.back().second = stop;
      else
        segs.push_back({t, stop});
      remaining[rj] -= stop - t;
      t = stop;
    }
  }

  for (std::size_t j = 0; j < edf_flows.size(); ++j)
    out.completed[j] = remaining[j] <= 1e-7 * std::max(1e-7, duration[j]) ? 1 : 0;
  return out;
}

// Free time shared by every link of the flow's path within its span.
inline std::vector<std::pair<double, double>> path_free_gaps(
    const Flow& flow, const std::vector<int>& path, const Availability& availability) {
  Availability merge(1);
  for (int e : path)
    for (const auto& iv : availability.busy_intervals(e))
      merge.mark_busy(0, iv.first, iv.second);
  return merge.free_gaps(0, flow.release, flow.deadline);
}

}  // namespace detail

struct McfDiagnostics {
  int escalated = 0;             // flows committed at an escalated group intensity
  int overlapped = 0;            // flows scheduled at density on top of claims
  int intensity_inversions = 0;  // extractions with intensity above a predecessor
};

struct McfSchedule {
  Schedule schedule;                    // virtual-circuit mode
  std::vector<double> rates;            // one constant rate per flow
  std::vector<CriticalInterval> trace;  // extraction order, committed flows only
  std::vector<int> capacity_warnings;   // flows whose rate exceeds C
  McfDiagnostics diagnostics;

  bool clean() const {
    return diagnostics.escalated == 0 && diagnostics.overlapped == 0 &&
           diagnostics.intensity_inversions == 0;
  }
};

// Most-Critical-First: iteratively extracts the critical (interval, link)
// pair, fixes the common intensity as |P_i|^(1/alpha) * s_i for its flows,
// packs them EDF into the link's free time and claims those windows on every
// link of each flow's path. The transmission-rate cap is intentionally not
// enforced; rates above capacity are reported as warnings.
//
// A transmitting flow occupies its whole path, so placement respects the
// claims on every link of a flow's path. A flow whose path is too claimed to
// finish inside the critical interval is deferred to a later extraction; a
// flow that can never fit at the group rate is squeezed to the constant rate
// that exactly fills the free time its whole path still shares. Both cases
// only arise when critical groups on different links compete for one flow,
// where the greedy's interval structure is no longer exact; they are counted
// in the diagnostics.
inline McfSchedule most_critical_first(const Network& net,
                                       const std::vector<Flow>& flows,
                                       const std::vector<std::vector<int>>& paths) {
  LinkAssignment assignment = LinkAssignment::build(net, flows, paths);
  Availability availability(net.link_count());
  std::vector<char> scheduled(flows.size(), 0);

  McfSchedule result;
  result.schedule.mode = ShareMode::virtual_circuit;
  result.schedule.flows.resize(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i)
    result.schedule.flows[i].path = paths[i];
  result.rates.assign(flows.size(), 0.0);

  const double alpha = net.power().alpha;
  double previous_intensity = std::numeric_limits<double>::infinity();
  std::size_t left = flows.size();

  auto commit = [&](int i, const std::vector<std::pair<double, double>>& segments,
                    double rate, bool mark = true) {
    FlowPlan& plan = result.schedule.flows[static_cast<std::size_t>(i)];
    for (const auto& seg : segments) {
      plan.pieces.push_back({seg.first, seg.second, rate});
      if (mark)
        for (int e : assignment.paths[static_cast<std::size_t>(i)])
          availability.mark_busy(e, seg.first, seg.second);
    }
    result.rates[static_cast<std::size_t>(i)] = rate;
    scheduled[static_cast<std::size_t>(i)] = 1;
    --left;
  };

  // last resort for a flow whose span is fully claimed on some path link:
  // transmit at density across the whole span on top of the claims. A
  // virtual-circuit placement honoring the prior commitments no longer
  // exists for it (the greedy's per-link structure does not account for
  // cross-link claims), so exclusivity is knowingly given up for this flow.
  auto overlap_fallback = [&](int i) {
    const Flow& f = flows[static_cast<std::size_t>(i)];
    commit(i, {{f.release, f.deadline}}, f.density(), /*mark=*/false);
    ++result.diagnostics.overlapped;
  };

  while (left > 0) {
    auto ci = find_critical_interval(net, flows, assignment, scheduled, availability);
    if (!ci)
      throw std::logic_error("most_critical_first: unscheduled flows but no candidate");
    if (std::isinf(ci->intensity)) {
      // the critical link has no free time inside the hull at all
      for (int i : ci->flow_set) overlap_fallback(i);
      ci->overlapped = std::move(ci->flow_set);
      ci->flow_set = {};
      result.trace.push_back(std::move(*ci));
      continue;
    }
    if (ci->intensity > previous_intensity * (1.0 + 1e-9) + 1e-9)
      ++result.diagnostics.intensity_inversions;
    previous_intensity = std::max(ci->intensity, 0.0);

    auto place_at = [&](double delta, const std::vector<int>& group) {
      std::vector<double> duration(group.size());
      for (std::size_t j = 0; j < group.size(); ++j) {
        int i = group[j];
        double hops =
            static_cast<double>(assignment.paths[static_cast<std::size_t>(i)].size());
        duration[j] = flows[static_cast<std::size_t>(i)].volume /
                      (delta / std::pow(hops, 1.0 / alpha));
      }
      auto gaps = availability.free_gaps(ci->link, ci->begin, ci->end);
      return detail::edf_place(flows, group, duration, gaps, assignment.paths,
                               ci->link, availability);
    };
    auto all_complete = [](const detail::Placement& p) {
      for (char c : p.completed)
        if (!c) return false;
      return true;
    };

    std::vector<int> group = ci->flow_set;
    detail::Placement placement = place_at(ci->intensity, group);

    if (!all_complete(placement)) {
      // Critical groups on other links already claimed part of this group's
      // path time, so the group rate is no longer achievable. Flows with no
      // shared free time left fall back to density-over-span; the rest get
      // the smallest group intensity whose EDF placement completes, keeping
      // the within-group rate law at the escalated intensity.
      std::vector<int> usable;
      for (int i : group) {
        auto gaps = detail::path_free_gaps(
            flows[static_cast<std::size_t>(i)],
            assignment.paths[static_cast<std::size_t>(i)], availability);
        double total = 0.0;
        for (const auto& g : gaps) total += g.second - g.first;
        if (total > 1e-10 * std::max(1.0, flows[static_cast<std::size_t>(i)].span_length())) {
          usable.push_back(i);
        } else {
          overlap_fallback(i);
          ci->overlapped.push_back(i);
        }
      }
      group = edf_order(flows, std::move(usable));
      if (!group.empty()) {
        double lo = ci->intensity, hi = ci->intensity;
        detail::Placement hi_placement;
        for (int step = 0; step < 80; ++step) {
          hi *= 2.0;
          hi_placement = place_at(hi, group);
          if (all_complete(hi_placement)) break;
        }
        if (!all_complete(hi_placement))
          throw std::logic_error("most_critical_first: escalation failed on link " +
                                 net.link(ci->link).id);
        for (int step = 0; step < 60; ++step) {
          double mid = 0.5 * (lo + hi);
          detail::Placement p = place_at(mid, group);
          if (all_complete(p)) {
            hi = mid;
            hi_placement = std::move(p);
          } else {
            lo = mid;
          }
        }
        placement = std::move(hi_placement);
        ci->intensity = hi;
        ci->squeezed = true;
        result.diagnostics.escalated += static_cast<int>(group.size());
      }
    }

    for (std::size_t j = 0; j < group.size(); ++j) {
      int i = group[j];
      double hops =
          static_cast<double>(assignment.paths[static_cast<std::size_t>(i)].size());
      double rate = ci->intensity / std::pow(hops, 1.0 / alpha);
      double served = 0.0;
      for (const auto& seg : placement.segments[j]) served += seg.second - seg.first;
      // pin the rate to the realized service time so volumes are exact
      double exact = flows[static_cast<std::size_t>(i)].volume / served;
      if (std::abs(exact - rate) > 1e-6 * rate + 1e-12)
        throw std::logic_error("most_critical_first: service time drifted for flow " +
                               flows[static_cast<std::size_t>(i)].id);
      commit(i, placement.segments[j], exact);
    }
    ci->flow_set = std::move(group);
    result.trace.push_back(std::move(*ci));
  }

  const double cap = net.power().capacity;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (result.rates[i] > cap * (1.0 + 1e-9) + 1e-12)
      result.capacity_warnings.push_back(static_cast<int>(i));
  }
  return result;
}

}  // namespace dcflow
