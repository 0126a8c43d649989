#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "buoyancy/model.hpp"

namespace buoyancy {

struct EngineConfig {
  // Weight of the worst resource (or worst workload, at node level) against
  // the mean.
  double alpha = 0.7;
  double violation_threshold = 0.1;
  // 1.0 disables smoothing of resource scores across windows.
  double ema_factor = 1.0;
  // Physical cores of the node. When absent the node CPU score is taken
  // against the sum of workload allocations.
  std::optional<double> node_cores;
  // Workloads missing from more than this many consecutive batches are
  // dropped.
  std::uint32_t expiry_windows = 3;
};

const EngineConfig& validate_engine_config(const EngineConfig& config);

struct NodeReport {
  std::uint64_t window_index = 0;
  Timestamp window_end;
  ResourceScores node_resource_scores;
  double node_buoyancy = 1;
  std::vector<BuoyancyReport> workload_reports;  // sorted by workload_id

  bool operator==(const NodeReport&) const = default;
};

// Relative SLO slack (slo - kpi) / slo. 1 when either the SLO or the KPI is
// absent. Negative once the SLO is violated.
double perf_score(std::optional<double> kpi, const SloSpec& slo);

// P * (alpha * (1 - max r) + (1 - alpha) * (1 - mean r)).
double buoyancy(double perf, std::span<const double> scores, double alpha);
double buoyancy(double perf, const ResourceScores& scores, double alpha);

// Node CPU and MBW are totals over node capacity; node LLC is the mean of the
// workload LLC scores.
ResourceScores node_resource_scores(
    std::span<const TelemetrySample> samples,
    std::span<const ResourceScores> scores, const CacheTopology& topology,
    std::optional<double> node_cores = std::nullopt);

// alpha * min(B) + (1 - alpha) * mean(B).
double node_buoyancy(std::span<const double> workload_buoyancies, double alpha);
double node_buoyancy(std::span<const BuoyancyReport> reports, double alpha);

// ln(high / low). Throws NonPositiveInput unless both are > 0.
double log_change(double low, double high);

/**
 * Stateful per-node scorer. Each step() consumes one window of samples (at
 * most one per workload) and returns an immutable NodeReport.
 *
 * Workloads absent from a batch keep reporting their last state until they
 * have been missing for more than expiry_windows batches. A missing KPI
 * reuses the last KPI seen for that workload.
 *
 * Not thread-safe; one owner calls step().
 */
class Engine {
 public:
  Engine(EngineConfig config, CacheTopology topology,
         std::map<std::string, SloSpec> slos = {});

  NodeReport step(std::span<const TelemetrySample> batch);

  const EngineConfig& config() const { return config_; }
  const CacheTopology& topology() const { return topology_; }
  std::size_t tracked_workloads() const { return state_.size(); }

 private:
  struct WorkloadState {
    TelemetrySample last_sample;
    ResourceScores scores;
    std::optional<double> last_kpi;
    std::uint64_t last_seen = 0;
  };

  const SloSpec& slo_for(const std::string& workload_id) const;

  EngineConfig config_;
  CacheTopology topology_;
  std::map<std::string, SloSpec> slos_;
  std::map<std::string, WorkloadState> state_;
  std::uint64_t window_ = 0;
};

}  // namespace buoyancy
