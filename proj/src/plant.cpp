#include "buoyancy/plant.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace buoyancy {

namespace {

// Fraction of the service rate that remains at full interference is floored
// so latency stays finite.
constexpr double kMinSpeed = 0.01;
// Utilisation at which the latency curve jumps to its overload level.
constexpr double kKneeUtilisation = 0.95;

}  // namespace

namespace plant_model {

double service_rate(const PlantWorkload& w, double cores, double interference) {
  const double speed =
      std::max(1 - w.interference_sensitivity * interference, kMinSpeed);
  return cores * w.service_rate_per_core * speed;
}

double p95_latency_ms(const PlantWorkload& w, double mu, double load_rps,
                      double overload_multiplier) {
  if (load_rps <= 0) return w.base_latency_ms;
  if (load_rps < kKneeUtilisation * mu) {
    return w.base_latency_ms + w.latency_gain / (mu - load_rps);
  }
  const double at_knee =
      w.base_latency_ms + w.latency_gain / ((1 - kKneeUtilisation) * mu);
  return at_knee * overload_multiplier;
}

double miss_ratio(const PlantWorkload& w, double cache_kib) {
  return std::clamp(std::sqrt(w.working_set_kib) / std::sqrt(cache_kib), 0.0,
                    1.0);
}

}  // namespace plant_model

const PlantConfig& validate_plant_config(const PlantConfig& c) {
  validate_topology(c.topology);
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::ConfigError, "plant: " + what);
  };
  if (c.workloads.empty()) bad("no workloads");
  if (!(c.total_cores > 0)) bad("total_cores must be > 0");
  if (!(c.noise_sigma >= 0) || !std::isfinite(c.noise_sigma))
    bad("noise_sigma must be >= 0");
  if (!(c.window_s > 0)) bad("window_s must be > 0");
  if (!(c.overload_multiplier >= 1)) bad("overload_multiplier must be >= 1");
  std::set<std::string> ids;
  for (const auto& w : c.workloads) {
    const std::string tag = "workload '" + w.id + "': ";
    if (w.id.empty() || !ids.insert(w.id).second) bad("empty or duplicate id");
    if (!(w.service_rate_per_core > 0)) bad(tag + "service_rate_per_core must be > 0");
    if (!(w.latency_gain > 0)) bad(tag + "latency_gain must be > 0");
    if (!(w.base_latency_ms >= 0)) bad(tag + "base_latency_ms must be >= 0");
    if (!(w.working_set_kib > 0)) bad(tag + "working_set_kib must be > 0");
    if (!(w.working_set_kib < c.topology.l1_size_kib))
      bad(tag + "working_set_kib must be below the L1 size");
    if (!(w.mbw_per_req_bytes >= 0)) bad(tag + "mbw_per_req_bytes must be >= 0");
    if (!(w.interference_sensitivity >= 0 && w.interference_sensitivity <= 1))
      bad(tag + "interference_sensitivity must lie in [0, 1]");
    if (!(w.mem_refs_per_req > 0)) bad(tag + "mem_refs_per_req must be > 0");
  }
  return c;
}

Plant::Plant(PlantConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  validate_plant_config(config_);
}

const PlantWorkload& Plant::workload(const std::string& id) const {
  const auto it = std::find_if(config_.workloads.begin(), config_.workloads.end(),
                               [&](const auto& w) { return w.id == id; });
  if (it == config_.workloads.end()) {
    throw Error(ErrorCode::InvalidArgument, "plant: unknown workload '" + id + "'");
  }
  return *it;
}

double Plant::noisy(double value) {
  const double factor = 1 + config_.noise_sigma * gauss_(rng_);
  return value * std::max(factor, 0.0);
}

PlantWindow Plant::step(std::span<const Allocation> allocations,
                        double external_interference) {
  const CacheTopology& topo = config_.topology;
  if (!(external_interference >= 0 && external_interference <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "interference must lie in [0, 1]");
  }
  double cores_used = 0;
  std::set<std::string> ids;
  for (const auto& a : allocations) {
    workload(a.workload_id);
    if (!ids.insert(a.workload_id).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "plant: duplicate allocation for '" + a.workload_id + "'");
    }
    if (!(a.cores > 0) || !(a.load_rps >= 0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "plant: '" + a.workload_id + "' needs cores > 0 and load >= 0");
    }
    if (a.llc_kib && !(*a.llc_kib > 0 && *a.llc_kib <= topo.l3_size_kib)) {
      throw Error(ErrorCode::CapacityExceeded,
                  "plant: LLC allocation of '" + a.workload_id + "' exceeds the LLC");
    }
    cores_used += a.cores;
  }
  if (cores_used > config_.total_cores * (1 + 1e-12)) {
    throw Error(ErrorCode::CapacityExceeded,
                "plant: " + std::to_string(cores_used) + " cores allocated on a " +
                    std::to_string(config_.total_cores) + "-core node");
  }

  // Co-location pressure: share of node cores kept busy by the neighbours.
  std::vector<double> busy_share;
  for (const auto& a : allocations) {
    const PlantWorkload& w = workload(a.workload_id);
    const double utilisation =
        std::min(a.load_rps / (a.cores * w.service_rate_per_core), 1.0);
    busy_share.push_back(a.cores / config_.total_cores * utilisation);
  }
  double total_busy = 0;
  for (double s : busy_share) total_busy += s;

  const auto window = std::chrono::duration_cast<std::chrono::microseconds>(
      Seconds(config_.window_s));
  const Timestamp start = config_.start + window * static_cast<std::int64_t>(window_);
  ++window_;

  PlantWindow out;
  for (std::size_t i = 0; i < allocations.size(); ++i) {
    const Allocation& a = allocations[i];
    const PlantWorkload& w = workload(a.workload_id);
    const double pressure =
        std::clamp(external_interference + total_busy - busy_share[i], 0.0, 1.0);
    const double mu = plant_model::service_rate(w, a.cores, pressure);
    const double p95 = plant_model::p95_latency_ms(w, mu, a.load_rps,
                                                   config_.overload_multiplier);
    out.true_p95_ms[a.workload_id] = p95;

    const double llc = a.llc_kib.value_or(topo.l3_size_kib);
    const double m1 = plant_model::miss_ratio(w, topo.l1_size_kib);
    const double m2 = plant_model::miss_ratio(w, topo.l2_size_kib);
    const double m3 = plant_model::miss_ratio(w, llc);
    const double m_ref = plant_model::miss_ratio(w, topo.l3_size_kib);

    const double secs = config_.window_s;
    const double speed = mu / (a.cores * w.service_rate_per_core);
    auto counter = [](double v) {
      return static_cast<std::uint64_t>(std::llround(std::max(v, 0.0)));
    };

    TelemetrySample s;
    s.workload_id = a.workload_id;
    s.window_start = start;
    s.window_end = start + window;
    s.cpu_alloc_cores = a.cores;
    s.cpu_user_time_s = std::min(
        noisy(a.load_rps / (w.service_rate_per_core * speed) * secs),
        a.cores * secs);
    const double refs = noisy(a.load_rps * w.mem_refs_per_req * secs);
    s.mem_refs = counter(refs);
    s.l1_miss = counter(noisy(refs * m1));
    s.l2_miss = counter(noisy(refs * m2));
    s.l3_miss = counter(noisy(refs * m3));
    s.mbw_bytes =
        counter(noisy(a.load_rps * w.mbw_per_req_bytes * (m3 / m_ref) * secs));
    s.llc_alloc_kib = a.llc_kib;
    s.kpi_value = p95;
    out.batch.push_back(std::move(s));
  }
  return out;
}

}  // namespace buoyancy
