#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dcflow/network.hpp"
#include "dcflow/schedule.hpp"

namespace dcflow {

constexpr double kVolumeRelTol = 1e-9;    // per-flow volume equality
constexpr double kCapacityAbsTol = 1e-9;  // link rate vs capacity

struct Violation {
  enum class Kind {
    structure,   // malformed plan (bad path, bad piece, missing entry)
    volume,      // integrated rate != flow volume
    span,        // transmission outside [release, deadline]
    capacity,    // aggregate link rate exceeds C
    exclusivity  // two flows share a link instant in virtual-circuit mode
  };

  Kind kind;
  int flow = -1;  // index, -1 when not flow-specific
  int link = -1;  // index, -1 when not link-specific
  double measured = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct FeasibilityReport {
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }

  std::string summary() const {
    if (violations.empty()) return "feasible";
    std::ostringstream os;
    os << violations.size() << " violation(s): ";
    for (std::size_t i = 0; i < violations.size() && i < 8; ++i) {
      if (i) os << "; ";
      os << violations[i].detail;
    }
    if (violations.size() > 8) os << "; ...";
    return os.str();
  }
};

namespace detail {

struct LinkEvent {
  double t;
  double delta_rate;
  int delta_count;
};

}  // namespace detail

// Checks a schedule against the instance. All problems are reported as
// violations; malformed input never throws.
inline FeasibilityReport check_schedule(const Schedule& schedule,
                                        const std::vector<Flow>& flows,
                                        const Network& net) {
  FeasibilityReport report;
  auto add = [&report](Violation::Kind kind, int flow, int link, double measured,
                       double limit, std::string detail) {
    report.violations.push_back(
        Violation{kind, flow, link, measured, limit, std::move(detail)});
  };

  if (schedule.flows.size() != flows.size()) {
    add(Violation::Kind::structure, -1, -1,
        static_cast<double>(schedule.flows.size()), static_cast<double>(flows.size()),
        "schedule covers " + std::to_string(schedule.flows.size()) + " of " +
            std::to_string(flows.size()) + " flows");
    return report;
  }

  std::vector<std::vector<detail::LinkEvent>> events(
      static_cast<std::size_t>(net.link_count()));

  for (std::size_t i = 0; i < flows.size(); ++i) {
    const Flow& f = flows[i];
    const FlowPlan& plan = schedule.flows[i];

    bool path_ok = path_connects(net, plan.path, f.src, f.dst);
    if (!path_ok) {
      add(Violation::Kind::structure, static_cast<int>(i), -1, 0, 0,
          "flow " + f.id + ": path is not a simple " + net.node_name(f.src) + "->" +
              net.node_name(f.dst) + " path");
    }

    double moved = 0.0;
    for (const RatePiece& p : plan.pieces) {
      if (!(p.t0 < p.t1)) {
        add(Violation::Kind::structure, static_cast<int>(i), -1, p.t1, p.t0,
            "flow " + f.id + ": empty or reversed rate piece");
        continue;
      }
      if (p.rate < -kRateEps) {
        add(Violation::Kind::structure, static_cast<int>(i), -1, p.rate, 0.0,
            "flow " + f.id + ": negative rate");
        continue;
      }
      if (p.t0 < f.release - 1e-9 || p.t1 > f.deadline + 1e-9) {
        add(Violation::Kind::span, static_cast<int>(i), -1, p.t0, f.release,
            "flow " + f.id + ": transmission outside span [" +
                std::to_string(f.release) + "," + std::to_string(f.deadline) + "]");
      }
      moved += p.data();
      if (path_ok && p.rate > kRateEps) {
        for (int e : plan.path) {
          events[static_cast<std::size_t>(e)].push_back({p.t0, p.rate, +1});
          events[static_cast<std::size_t>(e)].push_back({p.t1, -p.rate, -1});
        }
      }
    }

    if (std::abs(moved - f.volume) > kVolumeRelTol * std::max(1.0, f.volume)) {
      add(Violation::Kind::volume, static_cast<int>(i), -1, moved, f.volume,
          "flow " + f.id + ": transmitted " + std::to_string(moved) + " of " +
              std::to_string(f.volume));
    }
  }

  const double cap = net.power().capacity;
  for (int e = 0; e < net.link_count(); ++e) {
    auto& ev = events[static_cast<std::size_t>(e)];
    if (ev.empty()) continue;
    std::sort(ev.begin(), ev.end(),
              [](const detail::LinkEvent& a, const detail::LinkEvent& b) { return a.t < b.t; });
    double rate = 0.0;
    int active = 0;
    std::size_t j = 0;
    bool over_cap = false, over_excl = false;  // report each link once
    while (j < ev.size()) {
      double t = ev[j].t;
      while (j < ev.size() && ev[j].t <= t + 1e-15) {
        rate += ev[j].delta_rate;
        active += ev[j].delta_count;
        ++j;
      }
      if (j >= ev.size()) break;
      // open interval (t, ev[j].t) has constant aggregate rate
      if (!over_cap && rate > cap + kCapacityAbsTol) {
        over_cap = true;
        add(Violation::Kind::capacity, -1, e, rate, cap,
            "link " + net.link(e).id + ": aggregate rate " + std::to_string(rate) +
                " exceeds capacity " + std::to_string(cap) + " at t=" + std::to_string(t));
      }
      if (!over_excl && schedule.mode == ShareMode::virtual_circuit && active > 1) {
        over_excl = true;
        add(Violation::Kind::exclusivity, -1, e, static_cast<double>(active), 1.0,
            "link " + net.link(e).id + ": " + std::to_string(active) +
                " concurrent flows in virtual-circuit mode at t=" + std::to_string(t));
      }
    }
  }

  return report;
}

inline bool is_feasible(const Schedule& schedule, const std::vector<Flow>& flows,
                        const Network& net) {
  return check_schedule(schedule, flows, net).feasible();
}

}  // namespace dcflow
