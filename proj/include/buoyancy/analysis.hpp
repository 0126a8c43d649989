#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "buoyancy/engine.hpp"
#include "buoyancy/replay.hpp"

namespace buoyancy {

// Median KPI and buoyancy of one workload under low and high load.
struct SegmentMedians {
  std::string workload_id;
  double low_p95_ms = 0;
  double high_p95_ms = 0;
  double low_buoyancy = 0;
  double high_buoyancy = 0;
};

struct HeadroomRow {
  SegmentMedians medians;
  double p95_change_pct = 0;
  double p95_log_change = 0;
  double buoyancy_change_pct = 0;
  double buoyancy_log_change = 0;
};

/**
 * Low-to-high load comparison of latency and buoyancy. actuation_gap is how
 * much larger the mean buoyancy log-change magnitude is than the mean latency
 * log-change magnitude (0.193 means 19.3% larger).
 */
struct HeadroomTable {
  std::vector<HeadroomRow> rows;
  double mean_p95_log_change = 0;
  double mean_buoyancy_log_change = 0;
  double actuation_gap = 0;
};

double median(std::vector<double> values);

// Throws InsufficientData for an empty input and NonPositiveInput when a
// median is not strictly positive.
HeadroomTable headroom_table(std::span<const SegmentMedians> medians);

// Runs the replay through a fresh engine and takes per-workload medians of
// the KPI and buoyancy over windows labelled "low" and "high". Throws
// InsufficientData unless both segments have data for some workload.
std::vector<SegmentMedians> segment_medians(
    const std::vector<std::vector<ReplayRecord>>& windows, Engine& engine);

// CSV with header workload,low_p95_ms,high_p95_ms,low_buoyancy,high_buoyancy.
std::vector<SegmentMedians> read_medians_csv(const std::string& path);
bool looks_like_medians_csv(const std::string& path);

std::string format_headroom_csv(const HeadroomTable& table);
std::string format_headroom_text(const HeadroomTable& table);

struct SurfacePoint {
  std::optional<double> second_score;  // absent: single-score panel
  double perf = 0;
  double score = 0;
  double buoyancy = 0;
  bool approaching_violation = false;
};

// Buoyancy over a (P, r) grid on [0, 1]^2, one panel per entry of
// second_scores. step must lie in (0, 0.5].
std::vector<SurfacePoint> buoyancy_surface(
    double alpha, double step, double threshold = 0.1,
    const std::vector<std::optional<double>>& second_scores = {std::nullopt, 0.3,
                                                               0.8});

std::vector<double> surface_axis(double step);

std::string format_surface_csv(const std::vector<SurfacePoint>& points);

}  // namespace buoyancy
