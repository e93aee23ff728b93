#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dcflow/experiment.hpp"
#include "dcflow/network.hpp"
#include "dcflow/schedule.hpp"

namespace dcflow {

using nlohmann::json;

constexpr int kFormatVersion = 1;

struct Instance {
  Network network;
  std::vector<Flow> flows;
  std::vector<std::vector<int>> paths;  // per flow, empty when absent
  bool has_paths = false;
};

namespace detail {

inline void require_format(const json& j, const char* what) {
  if (!j.is_object()) throw std::runtime_error(std::string(what) + ": not a JSON object");
  if (!j.contains("format") || !j["format"].is_number_integer() ||
      j["format"].get<int>() != kFormatVersion)
    throw std::runtime_error(std::string(what) + ": missing or unsupported \"format\"");
}

inline double number_field(const json& j, const char* key, const char* ctx) {
  if (!j.contains(key) || !j[key].is_number())
    throw std::runtime_error(std::string(ctx) + ": missing numeric field \"" + key + "\"");
  return j[key].get<double>();
}

inline std::string string_field(const json& j, const char* key, const char* ctx) {
  if (!j.contains(key) || !j[key].is_string())
    throw std::runtime_error(std::string(ctx) + ": missing string field \"" + key + "\"");
  return j[key].get<std::string>();
}

}  // namespace detail

inline PowerParams power_from_json(const json& j) {
  PowerParams p;
  p.sigma = detail::number_field(j, "sigma", "power");
  p.mu = detail::number_field(j, "mu", "power");
  p.alpha = detail::number_field(j, "alpha", "power");
  p.capacity = detail::number_field(j, "capacity", "power");
  p.validate();
  return p;
}

inline json power_to_json(const PowerParams& p) {
  return json{{"sigma", p.sigma}, {"mu", p.mu}, {"alpha", p.alpha},
              {"capacity", p.capacity}};
}

inline Instance instance_from_json(const json& j) {
  detail::require_format(j, "instance");
  if (!j.contains("network")) throw std::runtime_error("instance: missing \"network\"");
  const json& jn = j["network"];
  if (!jn.contains("nodes") || !jn["nodes"].is_array())
    throw std::runtime_error("instance: network.nodes must be an array");
  std::vector<std::string> nodes;
  for (const json& n : jn["nodes"]) nodes.push_back(n.get<std::string>());
  std::vector<std::tuple<std::string, std::string, std::string>> links;
  if (!jn.contains("links") || !jn["links"].is_array())
    throw std::runtime_error("instance: network.links must be an array");
  for (const json& l : jn["links"])
    links.push_back({detail::string_field(l, "id", "link"),
                     detail::string_field(l, "u", "link"),
                     detail::string_field(l, "v", "link")});
  if (!jn.contains("power")) throw std::runtime_error("instance: missing network.power");

  Instance inst{Network(nodes, links, power_from_json(jn["power"])), {}, {}, false};

  if (!j.contains("flows") || !j["flows"].is_array())
    throw std::runtime_error("instance: missing \"flows\" array");
  for (const json& jf : j["flows"]) {
    Flow f;
    f.id = detail::string_field(jf, "id", "flow");
    f.volume = detail::number_field(jf, "w", "flow");
    f.release = detail::number_field(jf, "r", "flow");
    f.deadline = detail::number_field(jf, "d", "flow");
    f.src = inst.network.node_index(detail::string_field(jf, "p", "flow"));
    f.dst = inst.network.node_index(detail::string_field(jf, "q", "flow"));
    f.validate(inst.network);
    inst.flows.push_back(f);
  }

  if (j.contains("paths")) {
    const json& jp = j["paths"];
    inst.paths.resize(inst.flows.size());
    inst.has_paths = true;
    for (std::size_t i = 0; i < inst.flows.size(); ++i) {
      const std::string& id = inst.flows[i].id;
      if (!jp.contains(id))
        throw std::runtime_error("instance: paths section misses flow " + id);
      for (const json& link_id : jp[id])
        inst.paths[i].push_back(inst.network.link_index(link_id.get<std::string>()));
      if (!path_connects(inst.network, inst.paths[i], inst.flows[i].src,
                         inst.flows[i].dst))
        throw std::runtime_error("instance: path of flow " + id +
                                 " does not connect its endpoints");
    }
  }
  return inst;
}

inline json instance_to_json(const Network& net, const std::vector<Flow>& flows,
                             const std::vector<std::vector<int>>* paths = nullptr) {
  json jn;
  jn["nodes"] = json::array();
  for (const std::string& n : net.nodes()) jn["nodes"].push_back(n);
  jn["links"] = json::array();
  for (const Link& l : net.links())
    jn["links"].push_back(json{{"id", l.id},
                               {"u", net.node_name(l.u)},
                               {"v", net.node_name(l.v)}});
  jn["power"] = power_to_json(net.power());

  json j;
  j["format"] = kFormatVersion;
  j["network"] = jn;
  j["flows"] = json::array();
  for (const Flow& f : flows)
    j["flows"].push_back(json{{"id", f.id},
                              {"w", f.volume},
                              {"r", f.release},
                              {"d", f.deadline},
                              {"p", net.node_name(f.src)},
                              {"q", net.node_name(f.dst)}});
  if (paths) {
    json jp;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      json arr = json::array();
      for (int e : (*paths)[i]) arr.push_back(net.link(e).id);
      jp[flows[i].id] = arr;
    }
    j["paths"] = jp;
  }
  return j;
}

inline json schedule_to_json(const Schedule& schedule, const std::vector<Flow>& flows,
                             const Network& net) {
  json j;
  j["format"] = kFormatVersion;
  j["mode"] = share_mode_name(schedule.mode);
  j["flows"] = json::array();
  for (std::size_t i = 0; i < schedule.flows.size(); ++i) {
    const FlowPlan& plan = schedule.flows[i];
    json jf;
    jf["id"] = flows[i].id;
    jf["path"] = json::array();
    for (int e : plan.path) jf["path"].push_back(net.link(e).id);
    jf["pieces"] = json::array();
    for (const RatePiece& p : plan.pieces)
      jf["pieces"].push_back(json{{"t0", p.t0}, {"t1", p.t1}, {"rate", p.rate}});
    j["flows"].push_back(jf);
  }
  return j;
}

inline Schedule schedule_from_json(const json& j, const std::vector<Flow>& flows,
                                   const Network& net) {
  detail::require_format(j, "schedule");
  std::string mode = detail::string_field(j, "mode", "schedule");
  Schedule s;
  if (mode == "virtual-circuit")
    s.mode = ShareMode::virtual_circuit;
  else if (mode == "pooled")
    s.mode = ShareMode::pooled;
  else
    throw std::runtime_error("schedule: unknown mode \"" + mode + "\"");
  if (!j.contains("flows") || !j["flows"].is_array())
    throw std::runtime_error("schedule: missing \"flows\" array");
  s.flows.resize(flows.size());
  for (const json& jf : j["flows"]) {
    std::string id = detail::string_field(jf, "id", "schedule flow");
    std::size_t idx = flows.size();
    for (std::size_t i = 0; i < flows.size(); ++i)
      if (flows[i].id == id) idx = i;
    if (idx == flows.size())
      throw std::runtime_error("schedule: unknown flow \"" + id + "\"");
    FlowPlan& plan = s.flows[idx];
    for (const json& link_id : jf["path"])
      plan.path.push_back(net.link_index(link_id.get<std::string>()));
    for (const json& jp : jf["pieces"])
      plan.pieces.push_back({detail::number_field(jp, "t0", "piece"),
                             detail::number_field(jp, "t1", "piece"),
                             detail::number_field(jp, "rate", "piece")});
  }
  return s;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  detail::require_format(j, "experiment config");
  ExperimentConfig cfg;
  if (j.contains("topology")) {
    const json& jt = j["topology"];
    std::string kind = detail::string_field(jt, "kind", "topology");
    if (kind == "fat-tree")
      cfg.topology.kind = TopologySpec::Kind::fat_tree;
    else if (kind == "line")
      cfg.topology.kind = TopologySpec::Kind::line;
    else if (kind == "parallel-links")
      cfg.topology.kind = TopologySpec::Kind::parallel_links;
    else
      throw std::runtime_error("experiment config: unknown topology kind \"" + kind + "\"");
    cfg.topology.size = static_cast<int>(detail::number_field(jt, "size", "topology"));
  }
  if (j.contains("power")) cfg.power = power_from_json(j["power"]);
  if (j.contains("flow_counts")) {
    cfg.flow_counts.clear();
    for (const json& n : j["flow_counts"]) cfg.flow_counts.push_back(n.get<int>());
  }
  if (j.contains("repetitions")) cfg.repetitions = j["repetitions"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("max_retries")) cfg.max_retries = j["max_retries"].get<int>();
  if (j.contains("horizon")) {
    cfg.flow_gen.horizon_begin = j["horizon"][0].get<double>();
    cfg.flow_gen.horizon_end = j["horizon"][1].get<double>();
  }
  if (j.contains("volume")) {
    const json& jv = j["volume"];
    cfg.flow_gen.volume_mean = detail::number_field(jv, "mean", "volume");
    cfg.flow_gen.volume_stddev = detail::number_field(jv, "stddev", "volume");
    if (jv.contains("floor")) cfg.flow_gen.volume_floor = jv["floor"].get<double>();
  }
  cfg.validate();
  return cfg;
}

inline json experiment_summary_json(const ExperimentConfig& cfg,
                                    const ExperimentResult& result) {
  json j;
  j["format"] = kFormatVersion;
  j["flow_counts"] = cfg.flow_counts;
  j["repetitions"] = cfg.repetitions;
  j["seed"] = cfg.seed;
  j["series"] = json::array();
  for (const ExperimentSeries& s : result.series)
    j["series"].push_back(json{{"n_flows", s.n_flows},
                               {"mean_rs_over_lb", s.mean_rs_over_lb},
                               {"mean_sp_over_lb", s.mean_sp_over_lb},
                               {"rows_ok", s.rows_ok}});
  j["all_ok"] = result.all_ok;
  return j;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline Instance load_instance(const std::string& path) {
  return instance_from_json(json::parse(read_file(path)));
}

}  // namespace dcflow
