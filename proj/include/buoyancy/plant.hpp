#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "buoyancy/model.hpp"

namespace buoyancy {

/**
 * One synthetic service. Latency follows an M/M/1-style curve with a hard
 * overload knee; cache behaviour follows the exact power law
 * M(x) = sqrt(working_set_kib / x), so the engine's MRC fit can recover it.
 */
struct PlantWorkload {
  std::string id;
  double service_rate_per_core = 0;  // req/s per core without interference
  double base_latency_ms = 0;
  double latency_gain = 0;  // ms * req/s
  // Cache size (KiB) at which the miss ratio reaches 1. Must stay below the
  // L1 size so all three cache levels sit on the decreasing part of the curve.
  double working_set_kib = 0;
  double mbw_per_req_bytes = 0;
  double interference_sensitivity = 0;  // gamma in [0, 1]
  double mem_refs_per_req = 1e5;
};

struct PlantConfig {
  std::vector<PlantWorkload> workloads;
  CacheTopology topology;
  double total_cores = 0;
  std::uint64_t seed = 0;
  double noise_sigma = 0.01;  // relative Gaussian counter noise
  double window_s = 1.0;
  double overload_multiplier = 10;
  Timestamp start{};
};

const PlantConfig& validate_plant_config(const PlantConfig& config);

struct Allocation {
  std::string workload_id;
  double cores = 0;
  std::optional<double> llc_kib;  // absent: the full LLC
  double load_rps = 0;
};

struct PlantWindow {
  std::vector<TelemetrySample> batch;
  std::map<std::string, double> true_p95_ms;
};

// Noise-free plant relations, exposed for closed-form checks.
namespace plant_model {

double service_rate(const PlantWorkload& w, double cores, double interference);
// P95 latency in ms at load lambda against service rate mu.
double p95_latency_ms(const PlantWorkload& w, double mu, double load_rps,
                      double overload_multiplier = 10);
double miss_ratio(const PlantWorkload& w, double cache_kib);

}  // namespace plant_model

/**
 * Deterministic contention plant. Each step() advances one window; identical
 * seeds and inputs give identical batches.
 */
class Plant {
 public:
  explicit Plant(PlantConfig config);

  // external_interference adds to the pressure from co-located workloads.
  // Throws CapacityExceeded if allocations do not fit the node.
  PlantWindow step(std::span<const Allocation> allocations,
                   double external_interference = 0);

  const PlantConfig& config() const { return config_; }
  std::uint64_t windows_elapsed() const { return window_; }

 private:
  const PlantWorkload& workload(const std::string& id) const;
  double noisy(double value);

  PlantConfig config_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::uint64_t window_ = 0;
};

}  // namespace buoyancy
