#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcflow/energy.hpp"
#include "dcflow/fmcf.hpp"
#include "dcflow/network.hpp"
#include "dcflow/oracles.hpp"
#include "dcflow/parallel.hpp"
#include "dcflow/rng.hpp"
#include "dcflow/rounding.hpp"
#include "dcflow/topology.hpp"

namespace dcflow {

struct FlowGenConfig {
  int count = 0;
  double horizon_begin = 1.0;
  double horizon_end = 100.0;
  double volume_mean = 10.0;
  double volume_stddev = 3.0;
  double volume_floor = 0.1;  // normal draws below this are redrawn
};

// Deterministic flow sampling: release/deadline uniform over the horizon with
// release < deadline enforced by redraw, volumes normal with a floor,
// endpoints uniform over distinct hosts.
inline std::vector<Flow> generate_flows(const FlowGenConfig& cfg,
                                        const std::vector<int>& hosts,
                                        std::uint64_t seed,
                                        const std::string& id_prefix = "f") {
  if (cfg.count < 0) throw std::invalid_argument("generate_flows: negative count");
  if (cfg.count > 0 && hosts.size() < 2)
    throw std::invalid_argument("generate_flows: need at least two hosts");
  if (!(cfg.horizon_begin < cfg.horizon_end))
    throw std::invalid_argument("generate_flows: empty horizon");
  if (cfg.volume_stddev < 0.0)
    throw std::invalid_argument("generate_flows: negative stddev");

  Rng rng(seed);
  std::vector<Flow> flows;
  flows.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) {
    Flow f;
    f.id = id_prefix + std::to_string(i);
    for (int guard = 0;; ++guard) {
      f.release = rng.uniform(cfg.horizon_begin, cfg.horizon_end);
      f.deadline = rng.uniform(cfg.horizon_begin, cfg.horizon_end);
      if (f.release < f.deadline) break;
      if (guard > 100000)
        throw std::runtime_error("generate_flows: could not draw release < deadline");
    }
    for (int guard = 0;; ++guard) {
      f.volume = rng.normal(cfg.volume_mean, cfg.volume_stddev);
      if (f.volume >= cfg.volume_floor) break;
      if (guard > 100000)
        throw std::runtime_error("generate_flows: volume floor unreachable");
    }
    f.src = hosts[rng.index(hosts.size())];
    do {
      f.dst = hosts[rng.index(hosts.size())];
    } while (f.dst == f.src);
    flows.push_back(f);
  }
  return flows;
}

struct TopologySpec {
  enum class Kind { fat_tree, line, parallel_links };
  Kind kind = Kind::fat_tree;
  int size = 4;  // fat-tree arity, line node count or parallel link count
};

inline Topology make_topology(const TopologySpec& spec, const PowerParams& power) {
  switch (spec.kind) {
    case TopologySpec::Kind::fat_tree:
      return make_fat_tree(spec.size, power);
    case TopologySpec::Kind::line:
      return make_line(spec.size, power);
    case TopologySpec::Kind::parallel_links:
      return make_parallel_links(spec.size, power);
  }
  throw std::invalid_argument("make_topology: unknown kind");
}

struct ExperimentConfig {
  TopologySpec topology;
  PowerParams power{0.0, 1.0, 2.0, 1000.0};  // experiment default: sigma = 0
  std::vector<int> flow_counts = {40, 80, 120, 160, 200};
  int repetitions = 10;
  std::uint64_t seed = 1;
  FlowGenConfig flow_gen;
  int max_retries = 64;
  unsigned threads = 0;

  void validate() const {
    power.validate();
    if (repetitions < 1)
      throw std::invalid_argument("ExperimentConfig: repetitions must be >= 1");
    if (flow_counts.empty())
      throw std::invalid_argument("ExperimentConfig: empty flow-count sweep");
    for (int n : flow_counts)
      if (n <= 0) throw std::invalid_argument("ExperimentConfig: flow counts must be > 0");
    if (flow_gen.volume_stddev < 0.0)
      throw std::invalid_argument("ExperimentConfig: negative volume stddev");
  }
};

struct ExperimentRow {
  int n_flows = 0;
  int rep = 0;
  double lb = 0.0;
  double sp_mcf = 0.0;
  double rs = 0.0;
  int rs_retries = 0;
  double lb_seconds = 0.0;
  double sp_seconds = 0.0;
  double rs_seconds = 0.0;
  double rs_ratio_bound = 0.0;  // diagnostic approximation-ratio bound
  bool failed = false;
  std::string failure;

  double rs_over_lb() const { return rs / lb; }
  double sp_over_lb() const { return sp_mcf / lb; }
};

struct ExperimentSeries {
  int n_flows = 0;
  double mean_rs_over_lb = 0.0;
  double mean_sp_over_lb = 0.0;
  int rows_ok = 0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentSeries> series;
  bool all_ok = true;
};

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  Topology topo = make_topology(config.topology, config.power);

  std::vector<std::pair<int, int>> grid;
  for (int n : config.flow_counts)
    for (int rep = 0; rep < config.repetitions; ++rep) grid.push_back({n, rep});

  ExperimentResult result;
  result.rows.resize(grid.size());

  parallel_for(
      grid.size(),
      [&](std::size_t g) {
        auto [n, rep] = grid[g];
        ExperimentRow& row = result.rows[g];
        row.n_flows = n;
        row.rep = rep;
        std::uint64_t instance_seed =
            derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(n)),
                        static_cast<std::uint64_t>(rep));
        FlowGenConfig gen = config.flow_gen;
        gen.count = n;
        try {
          std::vector<Flow> flows = generate_flows(gen, topo.hosts, instance_seed);
          IntervalStructure intervals = build_intervals(flows);

          auto t0 = std::chrono::steady_clock::now();
          LowerBoundResult lb = fractional_lower_bound(topo.network, flows, intervals);
          auto t1 = std::chrono::steady_clock::now();
          McfSchedule sp = shortest_path_baseline(topo.network, flows);
          auto t2 = std::chrono::steady_clock::now();
          RandomScheduleOptions rs_options;
          rs_options.max_retries = config.max_retries;
          RandomScheduleResult rs = random_schedule(topo.network, flows,
                                                    derive_seed(instance_seed, 0x5c5u),
                                                    rs_options);
          auto t3 = std::chrono::steady_clock::now();

          row.lb = lb.value;
          row.sp_mcf = schedule_energy(sp.schedule, flows, topo.network);
          row.lb_seconds = std::chrono::duration<double>(t1 - t0).count();
          row.sp_seconds = std::chrono::duration<double>(t2 - t1).count();
          row.rs_seconds = std::chrono::duration<double>(t3 - t2).count();
          row.rs_retries = rs.diagnostics.retries_used;
          row.rs_ratio_bound = rs.diagnostics.ratio_bound;
          if (!rs.success) {
            row.failed = true;
            row.failure = "random_schedule exhausted retries";
          } else {
            row.rs = schedule_energy(rs.schedule, flows, topo.network);
          }
        } catch (const std::exception& ex) {
          row.failed = true;
          row.failure = ex.what();
        }
      },
      config.threads);

  for (int n : config.flow_counts) {
    ExperimentSeries s;
    s.n_flows = n;
    for (const ExperimentRow& row : result.rows) {
      if (row.n_flows != n) continue;
      if (row.failed) {
        result.all_ok = false;
        continue;
      }
      s.mean_rs_over_lb += row.rs_over_lb();
      s.mean_sp_over_lb += row.sp_over_lb();
      ++s.rows_ok;
    }
    if (s.rows_ok > 0) {
      s.mean_rs_over_lb /= s.rows_ok;
      s.mean_sp_over_lb /= s.rows_ok;
    }
    result.series.push_back(s);
  }
  return result;
}

// Canonical CSV emission; fixed column set and %.12g formatting keep repeated
// runs byte-identical.
inline std::string experiment_csv(const ExperimentResult& result) {
  std::string csv = "n_flows,rep,lb,sp_mcf,rs,rs_over_lb,sp_over_lb\n";
  char buf[256];
  for (const ExperimentRow& row : result.rows) {
    if (row.failed) {
      std::snprintf(buf, sizeof buf, "%d,%d,failed,failed,failed,failed,failed\n",
                    row.n_flows, row.rep);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                    row.n_flows, row.rep, row.lb, row.sp_mcf, row.rs,
                    row.rs_over_lb(), row.sp_over_lb());
    }
    csv += buf;
  }
  return csv;
}

}  // namespace dcflow
