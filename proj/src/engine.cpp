#include "buoyancy/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "buoyancy/scores.hpp"

namespace buoyancy {

namespace {

// Sorted summation makes the result independent of input order.
double ordered_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double ordered_mean(std::vector<double> values) {
  const double n = static_cast<double>(values.size());
  return ordered_sum(std::move(values)) / n;
}

void check_alpha(double alpha) {
  if (!(alpha >= 0 && alpha <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  }
}

const SloSpec kNoSlo{};

}  // namespace

const EngineConfig& validate_engine_config(const EngineConfig& c) {
  check_alpha(c.alpha);
  if (!std::isfinite(c.violation_threshold)) {
    throw Error(ErrorCode::InvalidArgument, "violation_threshold must be finite");
  }
  if (!(c.ema_factor > 0 && c.ema_factor <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "ema_factor must lie in (0, 1]");
  }
  if (c.node_cores && !(*c.node_cores > 0)) {
    throw Error(ErrorCode::InvalidArgument, "node_cores must be > 0");
  }
  return c;
}

double perf_score(std::optional<double> kpi, const SloSpec& slo) {
  validate_slo(slo);
  if (!slo.slo_value || !kpi) return 1;
  if (!(*kpi >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "KPI value must be >= 0");
  }
  return (*slo.slo_value - *kpi) / *slo.slo_value;
}

double buoyancy(double perf, std::span<const double> scores, double alpha) {
  if (scores.empty()) {
    throw Error(ErrorCode::EmptyScoreSet, "no resource scores");
  }
  check_alpha(alpha);
  const double worst = *std::max_element(scores.begin(), scores.end());
  const double mean =
      std::min(ordered_mean({scores.begin(), scores.end()}), worst);
  // (1 - mean) - alpha * (max - mean) is the weighted sum rearranged so the
  // single-score and all-equal cases collapse to exactly 1 - r.
  const double headroom = (1 - mean) - alpha * (worst - mean);
  return perf * headroom;
}

double buoyancy(double perf, const ResourceScores& scores, double alpha) {
  const std::vector<double> v = scores.values();
  return buoyancy(perf, std::span<const double>(v), alpha);
}

ResourceScores node_resource_scores(std::span<const TelemetrySample> samples,
                                    std::span<const ResourceScores> scores,
                                    const CacheTopology& topology,
                                    std::optional<double> node_cores) {
  if (samples.empty()) throw Error(ErrorCode::EmptyNode, "no workloads on node");
  if (samples.size() != scores.size()) {
    throw Error(ErrorCode::InvalidArgument, "samples and scores differ in length");
  }
  // Rates per second so that windows of different length still add up.
  std::vector<double> cpu_rates;
  std::vector<double> mbw_rates;
  std::vector<double> llc;
  double allocated_cores = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double window = samples[i].window_seconds();
    cpu_rates.push_back(samples[i].cpu_user_time_s / window);
    mbw_rates.push_back(samples[i].mbw_bytes_per_s());
    llc.push_back(scores[i].llc);
    allocated_cores += samples[i].cpu_alloc_cores;
  }
  const double capacity = node_cores.value_or(allocated_cores);
  if (!(capacity > 0)) {
    throw Error(ErrorCode::ZeroAllocation, "node has no CPU capacity");
  }
  auto clamp_unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  ResourceScores node;
  node.cpu = clamp_unit(ordered_sum(cpu_rates) / capacity);
  node.mbw = clamp_unit(ordered_sum(mbw_rates) / theoretical_max_mbw(topology));
  node.llc = clamp_unit(ordered_mean(llc));
  return node;
}

double node_buoyancy(std::span<const double> b, double alpha) {
  if (b.empty()) throw Error(ErrorCode::EmptyNode, "no workload buoyancies");
  check_alpha(alpha);
  const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
  const double mean = std::clamp(ordered_mean({b.begin(), b.end()}), *lo, *hi);
  return std::clamp(mean - alpha * (mean - *lo), *lo, mean);
}

double node_buoyancy(std::span<const BuoyancyReport> reports, double alpha) {
  std::vector<double> b;
  b.reserve(reports.size());
  for (const auto& r : reports) b.push_back(r.buoyancy);
  return node_buoyancy(std::span<const double>(b), alpha);
}

double log_change(double low, double high) {
  if (!(low > 0) || !(high > 0)) {
    throw Error(ErrorCode::NonPositiveInput, "log-change needs low, high > 0");
  }
  return std::log(high / low);
}

Engine::Engine(EngineConfig config, CacheTopology topology,
               std::map<std::string, SloSpec> slos)
    : config_(validate_engine_config(config)),
      topology_(validate_topology(topology)),
      slos_(std::move(slos)) {
  for (const auto& [id, slo] : slos_) validate_slo(slo);
}

const SloSpec& Engine::slo_for(const std::string& workload_id) const {
  const auto it = slos_.find(workload_id);
  return it == slos_.end() ? kNoSlo : it->second;
}

NodeReport Engine::step(std::span<const TelemetrySample> batch) {
  std::set<std::string> seen;
  for (const auto& sample : batch) {
    validate_sample(sample);
    if (!seen.insert(sample.workload_id).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate workload in batch: " + sample.workload_id);
    }
  }

  // Score everything before touching state so a failing sample leaves the
  // engine unchanged.
  std::vector<ResourceScores> fresh_scores;
  fresh_scores.reserve(batch.size());
  for (const auto& sample : batch) {
    fresh_scores.push_back(score_workload(sample, topology_));
  }

  const std::uint64_t window = ++window_;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TelemetrySample& sample = batch[i];
    ResourceScores fresh = std::move(fresh_scores[i]);
    auto [it, inserted] = state_.try_emplace(sample.workload_id);
    WorkloadState& st = it->second;
    if (!inserted && config_.ema_factor < 1) {
      const double k = config_.ema_factor;
      auto blend = [k](double now, double before) {
        return k * now + (1 - k) * before;
      };
      fresh.cpu = blend(fresh.cpu, st.scores.cpu);
      fresh.llc = blend(fresh.llc, st.scores.llc);
      fresh.mbw = blend(fresh.mbw, st.scores.mbw);
      for (auto& [name, v] : fresh.extra) {
        if (auto old = st.scores.extra.find(name); old != st.scores.extra.end())
          v = blend(v, old->second);
      }
    }
    st.scores = std::move(fresh);
    st.last_sample = sample;
    st.last_seen = window;
    if (sample.kpi_value) st.last_kpi = sample.kpi_value;
  }

  std::erase_if(state_, [&](const auto& entry) {
    return window - entry.second.last_seen > config_.expiry_windows;
  });
  if (state_.empty()) throw Error(ErrorCode::EmptyNode, "no live workloads");

  NodeReport report;
  report.window_index = window;
  std::vector<TelemetrySample> samples;
  std::vector<ResourceScores> scores;
  for (const auto& [id, st] : state_) {
    BuoyancyReport r;
    r.workload_id = id;
    r.perf_score = perf_score(st.last_kpi, slo_for(id));
    r.resource_scores = st.scores;
    r.buoyancy = buoyancy(r.perf_score, st.scores, config_.alpha);
    r.approaching_violation = r.buoyancy <= config_.violation_threshold;
    report.workload_reports.push_back(std::move(r));
    samples.push_back(st.last_sample);
    scores.push_back(st.scores);
    report.window_end = std::max(report.window_end, st.last_sample.window_end);
  }
  report.node_resource_scores =
      node_resource_scores(samples, scores, topology_, config_.node_cores);
  report.node_buoyancy = node_buoyancy(report.workload_reports, config_.alpha);
  return report;
}

}  // namespace buoyancy
