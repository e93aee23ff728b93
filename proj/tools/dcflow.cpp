// Command-line front end: instance and topology generation, the schedulers,
// the reference solvers and the LB / SP+MCF / RS comparison experiment.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcflow/dcflow.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitValidation = 4;

void emit(const std::string& output, const std::string& content) {
  if (output.empty() || output == "-")
    std::cout << content << std::endl;
  else
    dcflow::write_file(output, content + "\n");
}

std::vector<std::vector<int>> require_paths(const dcflow::Instance& inst,
                                            const std::string& paths_file) {
  if (!paths_file.empty()) {
    dcflow::json j = dcflow::json::parse(dcflow::read_file(paths_file));
    const dcflow::json& jp = j.contains("paths") ? j["paths"] : j;
    std::vector<std::vector<int>> paths(inst.flows.size());
    for (std::size_t i = 0; i < inst.flows.size(); ++i) {
      const std::string& id = inst.flows[i].id;
      if (!jp.contains(id))
        throw std::runtime_error("paths file misses flow " + id);
      for (const dcflow::json& link_id : jp[id])
        paths[i].push_back(inst.network.link_index(link_id.get<std::string>()));
    }
    return paths;
  }
  if (!inst.has_paths)
    throw std::runtime_error(
        "fixed routes required: add a \"paths\" section to the instance or pass --paths");
  return inst.paths;
}

dcflow::json rates_json(const std::vector<dcflow::Flow>& flows,
                        const std::vector<double>& rates) {
  dcflow::json j;
  for (std::size_t i = 0; i < flows.size() && i < rates.size(); ++i)
    j[flows[i].id] = rates[i];
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-minimal scheduling and routing of deadline-constrained flows"};
  app.require_subcommand(1);

  std::string output;
  std::uint64_t seed = 1;
  std::string format = "json";
  double tolerance = 1e-9;
  app.add_option("--output,-o", output, "output file ('-' for stdout)")->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--format", format, "output format for reports (json or csv)")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--tolerance", tolerance, "feasibility reporting tolerance");

  // gen-topology
  auto* gen_topology = app.add_subcommand("gen-topology", "emit a generated network");
  std::string topo_kind = "fat-tree";
  int topo_size = 4;
  dcflow::PowerParams power{0.0, 1.0, 2.0, 1000.0};
  gen_topology->add_option("--kind", topo_kind, "fat-tree | line | parallel-links")
      ->check(CLI::IsMember({"fat-tree", "line", "parallel-links"}))
      ->capture_default_str();
  gen_topology->add_option("--size", topo_size, "arity / node count / link count")
      ->capture_default_str();
  gen_topology->add_option("--sigma", power.sigma, "idle power")->capture_default_str();
  gen_topology->add_option("--mu", power.mu, "dynamic power scale")->capture_default_str();
  gen_topology->add_option("--alpha", power.alpha, "dynamic power exponent")
      ->capture_default_str();
  gen_topology->add_option("--capacity", power.capacity, "maximum link rate")
      ->capture_default_str();

  // gen-flows
  auto* gen_flows = app.add_subcommand("gen-flows", "sample flows onto a network");
  std::string instance_file;
  int flow_count = 10;
  dcflow::FlowGenConfig gen_cfg;
  gen_flows->add_option("--instance", instance_file, "instance JSON with the network")
      ->required();
  gen_flows->add_option("--count", flow_count, "number of flows")->capture_default_str();
  gen_flows->add_option("--horizon-begin", gen_cfg.horizon_begin)->capture_default_str();
  gen_flows->add_option("--horizon-end", gen_cfg.horizon_end)->capture_default_str();
  gen_flows->add_option("--volume-mean", gen_cfg.volume_mean)->capture_default_str();
  gen_flows->add_option("--volume-stddev", gen_cfg.volume_stddev)->capture_default_str();

  // scheduler / solver subcommands share --instance
  auto* dcfs = app.add_subcommand("dcfs", "optimal rates for fixed routes");
  auto* dcfsr = app.add_subcommand("dcfsr", "randomized joint routing and scheduling");
  auto* baseline = app.add_subcommand("baseline", "shortest-path routing + dcfs");
  auto* oracle_dcfs_cmd = app.add_subcommand("oracle-dcfs", "numeric reference for dcfs");
  auto* oracle_dcfsr_cmd =
      app.add_subcommand("oracle-dcfsr", "exhaustive reference for dcfsr");
  auto* lb = app.add_subcommand("lb", "fractional lower bound");
  std::string paths_file;
  int max_retries = 64;
  std::string dump_fractional;
  std::size_t budget = 100000;
  for (CLI::App* cmd : {dcfs, dcfsr, baseline, oracle_dcfs_cmd, oracle_dcfsr_cmd, lb})
    cmd->add_option("--instance", instance_file, "instance JSON")->required();
  for (CLI::App* cmd : {dcfs, oracle_dcfs_cmd})
    cmd->add_option("--paths", paths_file, "JSON file with per-flow link-id lists");
  dcfsr->add_option("--max-retries", max_retries, "rounding retries")->capture_default_str();
  dcfsr->add_option("--dump-fractional", dump_fractional,
                    "write per-interval fractional solutions to this file");
  oracle_dcfsr_cmd->add_option("--budget", budget, "path-combination budget")
      ->capture_default_str();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "LB vs SP+MCF vs RS sweep");
  std::string config_file;
  std::string flow_counts_arg = "40,80,120,160,200";
  dcflow::ExperimentConfig exp_cfg;
  bool plot_data = false;
  experiment->add_option("--config", config_file, "experiment config JSON");
  experiment->add_option("--topology", topo_kind, "fat-tree | line | parallel-links")
      ->check(CLI::IsMember({"fat-tree", "line", "parallel-links"}));
  experiment->add_option("--size", topo_size, "topology size parameter");
  experiment->add_option("--flows", flow_counts_arg, "comma-separated flow counts")
      ->capture_default_str();
  experiment->add_option("--reps", exp_cfg.repetitions, "repetitions per flow count")
      ->capture_default_str();
  experiment->add_option("--sigma", exp_cfg.power.sigma)->capture_default_str();
  experiment->add_option("--mu", exp_cfg.power.mu)->capture_default_str();
  experiment->add_option("--alpha", exp_cfg.power.alpha)->capture_default_str();
  experiment->add_option("--capacity", exp_cfg.power.capacity)->capture_default_str();
  experiment->add_option("--max-retries", exp_cfg.max_retries)->capture_default_str();
  experiment->add_flag("--plot-data", plot_data, "also emit per-series JSON");

  // validate
  auto* validate = app.add_subcommand("validate", "check a schedule file");
  std::string schedule_file;
  validate->add_option("--instance", instance_file, "instance JSON")->required();
  validate->add_option("--schedule", schedule_file, "schedule JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen_topology->parsed()) {
      dcflow::TopologySpec spec;
      spec.size = topo_size;
      if (topo_kind == "fat-tree") spec.kind = dcflow::TopologySpec::Kind::fat_tree;
      if (topo_kind == "line") spec.kind = dcflow::TopologySpec::Kind::line;
      if (topo_kind == "parallel-links")
        spec.kind = dcflow::TopologySpec::Kind::parallel_links;
      dcflow::Topology topo = dcflow::make_topology(spec, power);
      emit(output, dcflow::instance_to_json(topo.network, {}).dump(2));
      return kExitOk;
    }

    if (gen_flows->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      gen_cfg.count = flow_count;
      // hosts: nodes named *host* when present, otherwise every node
      std::vector<int> hosts;
      for (int v = 0; v < inst.network.node_count(); ++v)
        if (inst.network.node_name(v).find("host") != std::string::npos)
          hosts.push_back(v);
      if (hosts.empty())
        for (int v = 0; v < inst.network.node_count(); ++v) hosts.push_back(v);
      std::vector<dcflow::Flow> flows = dcflow::generate_flows(gen_cfg, hosts, seed);
      emit(output, dcflow::instance_to_json(inst.network, flows).dump(2));
      return kExitOk;
    }

    if (dcfs->parsed() || baseline->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      dcflow::McfSchedule mcf =
          dcfs->parsed()
              ? dcflow::most_critical_first(inst.network, inst.flows,
                                            require_paths(inst, paths_file))
              : dcflow::shortest_path_baseline(inst.network, inst.flows);
      for (int i : mcf.capacity_warnings)
        std::cerr << "warning: flow " << inst.flows[static_cast<std::size_t>(i)].id
                  << " rate " << mcf.rates[static_cast<std::size_t>(i)]
                  << " exceeds capacity " << inst.network.power().capacity << "\n";
      std::cerr << "dynamic_energy="
                << dcflow::dynamic_energy(mcf.schedule, inst.flows, inst.network)
                << " schedule_energy="
                << dcflow::schedule_energy(mcf.schedule, inst.flows, inst.network)
                << "\n";
      emit(output, dcflow::schedule_to_json(mcf.schedule, inst.flows, inst.network).dump(2));
      return kExitOk;
    }

    if (dcfsr->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      dcflow::RandomScheduleOptions options;
      options.max_retries = max_retries;
      options.keep_fractional = !dump_fractional.empty();
      dcflow::RandomScheduleResult rs =
          dcflow::random_schedule(inst.network, inst.flows, seed, options);
      if (!dump_fractional.empty()) {
        dcflow::json jd;
        jd["format"] = dcflow::kFormatVersion;
        jd["intervals"] = dcflow::json::array();
        dcflow::IntervalStructure intervals = dcflow::build_intervals(inst.flows);
        for (int k = 0; k < intervals.count(); ++k) {
          const dcflow::FmcfSolution& sol =
              rs.fractional[rs.fractional_of_interval[static_cast<std::size_t>(k)]];
          dcflow::json jk;
          jk["k"] = k;
          jk["t0"] = intervals.begin(k);
          jk["t1"] = intervals.end(k);
          jk["objective"] = sol.objective;
          dcflow::json jflows;
          for (std::size_t s = 0; s < sol.commodities.size(); ++s) {
            const dcflow::Flow& f =
                inst.flows[static_cast<std::size_t>(sol.commodities[s])];
            dcflow::json jy;
            for (int e = 0; e < inst.network.link_count(); ++e) {
              double y = sol.fraction_on_link(s, e, f.density());
              if (y > 1e-12) jy[inst.network.link(e).id] = y;
            }
            jflows[f.id] = jy;
          }
          jk["flows"] = jflows;
          jd["intervals"].push_back(jk);
        }
        dcflow::write_file(dump_fractional, jd.dump(2) + "\n");
      }
      std::cerr << "retries=" << rs.diagnostics.retries_used
                << " lambda=" << rs.diagnostics.lambda
                << " max_density=" << rs.diagnostics.max_density
                << " ratio_bound=" << rs.diagnostics.ratio_bound << "\n";
      if (!rs.success) {
        std::cerr << "random_schedule failed after " << rs.diagnostics.retries_used
                  << " retries; violating links:";
        for (const auto& v : rs.diagnostics.last_violations)
          std::cerr << " " << inst.network.link(v.link).id << "@I" << v.interval;
        std::cerr << "\n";
        return kExitSolver;
      }
      std::cerr << "schedule_energy="
                << dcflow::schedule_energy(rs.schedule, inst.flows, inst.network) << "\n";
      emit(output, dcflow::schedule_to_json(rs.schedule, inst.flows, inst.network).dump(2));
      return kExitOk;
    }

    if (oracle_dcfs_cmd->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      dcflow::OracleDcfsOptions options;
      options.seed = seed;
      dcflow::OracleResult r = dcflow::oracle_dcfs(
          inst.network, inst.flows, require_paths(inst, paths_file), options);
      dcflow::json j{{"format", dcflow::kFormatVersion},
                     {"method", r.method},
                     {"objective", r.objective},
                     {"residual", r.residual},
                     {"rates", rates_json(inst.flows, r.rates)}};
      emit(output, j.dump(2));
      return kExitOk;
    }

    if (oracle_dcfsr_cmd->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      dcflow::OracleDcfsrOptions options;
      options.combination_budget = budget;
      dcflow::OracleResult r = dcflow::oracle_dcfsr(inst.network, inst.flows, options);
      dcflow::json jp;
      for (std::size_t i = 0; i < inst.flows.size(); ++i) {
        dcflow::json arr = dcflow::json::array();
        for (int e : r.paths[i]) arr.push_back(inst.network.link(e).id);
        jp[inst.flows[i].id] = arr;
      }
      dcflow::json j{{"format", dcflow::kFormatVersion},
                     {"method", r.method},
                     {"objective", r.objective},
                     {"evaluations", r.evaluations},
                     {"paths", jp},
                     {"rates", rates_json(inst.flows, r.rates)}};
      emit(output, j.dump(2));
      return kExitOk;
    }

    if (lb->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      dcflow::IntervalStructure intervals = dcflow::build_intervals(inst.flows);
      dcflow::LowerBoundResult r =
          dcflow::fractional_lower_bound(inst.network, inst.flows, intervals);
      dcflow::json j{{"format", dcflow::kFormatVersion},
                     {"lower_bound", r.value},
                     {"dynamic_bound", r.dynamic_bound},
                     {"dynamic_primal", r.dynamic_primal},
                     {"idle_part", r.idle_part},
                     {"relative_gap", r.relative_gap},
                     {"iterations", r.iterations}};
      emit(output, j.dump(2));
      return kExitOk;
    }

    if (experiment->parsed()) {
      if (!config_file.empty()) {
        exp_cfg = dcflow::experiment_config_from_json(
            dcflow::json::parse(dcflow::read_file(config_file)));
      } else {
        if (topo_kind == "fat-tree") exp_cfg.topology.kind = dcflow::TopologySpec::Kind::fat_tree;
        if (topo_kind == "line") exp_cfg.topology.kind = dcflow::TopologySpec::Kind::line;
        if (topo_kind == "parallel-links")
          exp_cfg.topology.kind = dcflow::TopologySpec::Kind::parallel_links;
        exp_cfg.topology.size = topo_size;
        exp_cfg.flow_counts.clear();
        for (const std::string& tok : CLI::detail::split(flow_counts_arg, ','))
          exp_cfg.flow_counts.push_back(std::stoi(tok));
        exp_cfg.seed = seed;
      }
      dcflow::ExperimentResult result = dcflow::run_experiment(exp_cfg);
      std::string base = output.empty() || output == "-" ? "experiment" : output;
      dcflow::write_file(base + ".csv", dcflow::experiment_csv(result));
      dcflow::write_file(base + "-summary.json",
                         dcflow::experiment_summary_json(exp_cfg, result).dump(2) + "\n");
      if (plot_data) {
        dcflow::json series;
        series["n_flows"] = dcflow::json::array();
        series["rs_over_lb"] = dcflow::json::array();
        series["sp_over_lb"] = dcflow::json::array();
        for (const auto& s : result.series) {
          series["n_flows"].push_back(s.n_flows);
          series["rs_over_lb"].push_back(s.mean_rs_over_lb);
          series["sp_over_lb"].push_back(s.mean_sp_over_lb);
        }
        dcflow::write_file(base + "-series.json", series.dump(2) + "\n");
      }
      for (const auto& s : result.series)
        std::cerr << "n=" << s.n_flows << " rs/lb=" << s.mean_rs_over_lb
                  << " sp/lb=" << s.mean_sp_over_lb << " ok=" << s.rows_ok << "\n";
      return result.all_ok ? kExitOk : kExitSolver;
    }

    if (validate->parsed()) {
      dcflow::Instance inst = dcflow::load_instance(instance_file);
      dcflow::Schedule schedule = dcflow::schedule_from_json(
          dcflow::json::parse(dcflow::read_file(schedule_file)), inst.flows, inst.network);
      dcflow::FeasibilityReport report =
          dcflow::check_schedule(schedule, inst.flows, inst.network);
      dcflow::json j;
      j["format"] = dcflow::kFormatVersion;
      j["feasible"] = report.feasible();
      j["violations"] = dcflow::json::array();
      for (const dcflow::Violation& v : report.violations)
        j["violations"].push_back(v.detail);
      j["schedule_energy"] = dcflow::schedule_energy(schedule, inst.flows, inst.network);
      j["dynamic_energy"] = dcflow::dynamic_energy(schedule, inst.flows, inst.network);
      emit(output, j.dump(2));
      return report.feasible() ? kExitOk : kExitValidation;
    }
  } catch (const dcflow::FmcfInfeasible& ex) {
    std::cerr << "solver failure: " << ex.what() << "\n";
    return kExitSolver;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "configuration error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::logic_error& ex) {
    std::cerr << "solver failure: " << ex.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
