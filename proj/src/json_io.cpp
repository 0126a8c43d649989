#include "buoyancy/json_io.hpp"

#include <fstream>

#include "buoyancy/replay.hpp"

namespace buoyancy {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigError, what);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) config_error(std::string("expected an object around '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) config_error(std::string("missing '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) config_error(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) && !j.at(key).is_null() ? number(j, key) : fallback;
}

std::uint32_t count(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_unsigned()) {
    config_error(std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint32_t>();
}

std::string text(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) config_error(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

json to_json(const CacheTopology& t) {
  return json{
      {"l1_size_kib", t.l1_size_kib},
      {"l2_size_kib", t.l2_size_kib},
      {"l3_size_kib", t.l3_size_kib},
      {"l3_ways", t.l3_ways},
      {"mem_speed_mts", t.mem_speed_mts},
      {"mem_bus_width_bytes", t.mem_bus_width_bytes},
      {"mem_channels", t.mem_channels},
  };
}

CacheTopology topology_from_json(const json& j) {
  return CacheTopology{
      .l1_size_kib = number(j, "l1_size_kib"),
      .l2_size_kib = number(j, "l2_size_kib"),
      .l3_size_kib = number(j, "l3_size_kib"),
      .l3_ways = count(j, "l3_ways"),
      .mem_speed_mts = number(j, "mem_speed_mts"),
      .mem_bus_width_bytes = number(j, "mem_bus_width_bytes"),
      .mem_channels = count(j, "mem_channels"),
  };
}

json to_json(const ResourceScores& s) {
  json out{{"cpu", s.cpu}, {"llc", s.llc}, {"mbw", s.mbw}};
  for (const auto& [name, v] : s.extra) out[name] = v;
  return out;
}

json to_json(const BuoyancyReport& r) {
  return json{
      {"workload_id", r.workload_id},
      {"perf_score", r.perf_score},
      {"buoyancy", r.buoyancy},
      {"resource_scores", to_json(r.resource_scores)},
      {"approaching_violation", r.approaching_violation},
  };
}

json to_json(const NodeReport& r) {
  json workloads = json::array();
  for (const auto& w : r.workload_reports) workloads.push_back(to_json(w));
  return json{
      {"window_index", r.window_index},
      {"window_end", format_rfc3339(r.window_end)},
      {"node_resource_scores", to_json(r.node_resource_scores)},
      {"node_buoyancy", r.node_buoyancy},
      {"workload_reports", std::move(workloads)},
  };
}

std::map<std::string, SloSpec> slos_from_json(const json& j) {
  if (!j.is_object()) config_error("slo must be an object keyed by workload_id");
  std::map<std::string, SloSpec> out;
  for (const auto& [id, entry] : j.items()) {
    SloSpec slo;
    if (entry.contains("kpi_name")) slo.kpi_name = text(entry, "kpi_name");
    if (entry.contains("slo_value") && !entry.at("slo_value").is_null()) {
      slo.slo_value = number(entry, "slo_value");
    }
    try {
      validate_slo(slo);
    } catch (const Error& e) {
      config_error("slo for '" + id + "': " + e.what());
    }
    out.emplace(id, std::move(slo));
  }
  return out;
}

PlantConfig plant_config_from_json(const json& j) {
  PlantConfig c;
  const json& node = field(j, "node");
  c.topology = topology_from_json(field(node, "topology"));
  c.total_cores = number(node, "total_cores");
  if (j.contains("seed")) {
    const json& seed = j.at("seed");
    if (!seed.is_number_unsigned()) config_error("'seed' must be a non-negative integer");
    c.seed = seed.get<std::uint64_t>();
  }
  c.noise_sigma = number_or(j, "noise_sigma", c.noise_sigma);
  c.window_s = number_or(j, "window_s", c.window_s);
  c.overload_multiplier = number_or(j, "overload_multiplier", c.overload_multiplier);
  if (j.contains("start")) {
    try {
      c.start = parse_rfc3339(text(j, "start"));
    } catch (const Error& e) {
      config_error(std::string("'start': ") + e.what());
    }
  }
  const json& workloads = field(j, "workloads");
  if (!workloads.is_array()) config_error("'workloads' must be an array");
  for (const auto& w : workloads) {
    PlantWorkload pw;
    pw.id = text(w, "id");
    pw.service_rate_per_core = number(w, "service_rate_per_core");
    pw.base_latency_ms = number(w, "base_latency_ms");
    pw.latency_gain = number(w, "latency_gain");
    pw.working_set_kib = number(w, "working_set_kib");
    pw.mbw_per_req_bytes = number(w, "mbw_per_req_bytes");
    pw.interference_sensitivity = number(w, "interference_sensitivity");
    pw.mem_refs_per_req = number_or(w, "mem_refs_per_req", pw.mem_refs_per_req);
    c.workloads.push_back(std::move(pw));
  }
  try {
    validate_plant_config(c);
  } catch (const Error& e) {
    config_error(e.what());
  }
  return c;
}

Allocation allocation_from_json(const json& j) {
  Allocation a;
  a.workload_id = text(j, "workload_id");
  a.cores = number(j, "cores");
  a.load_rps = number(j, "load_rps");
  if (j.contains("llc_kib") && !j.at("llc_kib").is_null()) {
    a.llc_kib = number(j, "llc_kib");
  }
  return a;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path + ": " + e.what());
  }
}

}  // namespace buoyancy
