#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "buoyancy/error.hpp"

namespace buoyancy {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;
using Seconds = std::chrono::duration<double>;

/**
 * Cache and memory geometry of one node. Cache sizes are in KiB; the L1 size
 * is data plus instruction cache of one core. The L3 size is the part of the
 * LLC visible to workloads on this node.
 */
struct CacheTopology {
  double l1_size_kib = 0;
  double l2_size_kib = 0;
  double l3_size_kib = 0;
  std::uint32_t l3_ways = 0;
  double mem_speed_mts = 0;
  double mem_bus_width_bytes = 0;
  std::uint32_t mem_channels = 0;

  bool operator==(const CacheTopology&) const = default;
};

// Intel Xeon Silver 4309Y worker node: 48+32 KiB L1, 1280 KiB L2,
// 12 MiB / 12-way LLC, 4 channels of 8-byte DDR4-2666.
CacheTopology xeon_4309y_topology();

// Throws NonIncreasingCacheSizes or NonPositiveGeometry.
const CacheTopology& validate_topology(const CacheTopology& topology);

// Peak DRAM bandwidth in bytes per second.
double theoretical_max_mbw(const CacheTopology& topology);

double llc_way_size(const CacheTopology& topology);

// Service-level objective on a lower-is-better KPI such as P95 latency.
// An absent slo_value means the workload has no SLO.
struct SloSpec {
  std::string kpi_name = "p95_latency_ms";
  std::optional<double> slo_value;
};

const SloSpec& validate_slo(const SloSpec& slo);

/**
 * Raw counters and KPI of one workload over one observation window.
 * mem_refs is the number of L1 lookups (hits plus misses).
 */
struct TelemetrySample {
  std::string workload_id;
  Timestamp window_start;
  Timestamp window_end;
  double cpu_user_time_s = 0;
  double cpu_alloc_cores = 0;
  std::uint64_t mem_refs = 0;
  std::uint64_t l1_miss = 0;
  std::uint64_t l2_miss = 0;
  std::uint64_t l3_miss = 0;
  std::uint64_t mbw_bytes = 0;
  std::optional<double> mbw_alloc_bytes_per_s;
  std::optional<double> llc_alloc_kib;
  std::optional<double> kpi_value;

  double window_seconds() const {
    return std::chrono::duration_cast<Seconds>(window_end - window_start)
        .count();
  }
  // Memory bandwidth over the window in bytes per second.
  double mbw_bytes_per_s() const {
    return static_cast<double>(mbw_bytes) / window_seconds();
  }

  bool operator==(const TelemetrySample&) const = default;
};

// Rejects non-positive windows and negative or non-finite real fields.
const TelemetrySample& validate_sample(const TelemetrySample& sample);

/**
 * Per-resource scores of one workload, each in [0, 1]. A score near 1 marks
 * the resource as a likely bottleneck. Extra scores extend the set without
 * touching the three built-in resources.
 */
struct ResourceScores {
  double cpu = 0;
  double llc = 0;
  double mbw = 0;
  std::map<std::string, double> extra;

  // cpu, llc, mbw, then extras in name order.
  std::vector<double> values() const;

  bool operator==(const ResourceScores&) const = default;
};

struct BuoyancyReport {
  std::string workload_id;
  double perf_score = 1;
  double buoyancy = 1;
  ResourceScores resource_scores;
  bool approaching_violation = false;

  bool operator==(const BuoyancyReport&) const = default;
};

}  // namespace buoyancy
