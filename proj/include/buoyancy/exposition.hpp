#pragma once

#include <array>
#include <string>
#include <string_view>

#include "buoyancy/engine.hpp"

namespace buoyancy {

inline constexpr std::string_view kOpenMetricsContentType =
    "application/openmetrics-text; version=1.0.0; charset=utf-8";

// Metric families served on /metrics, in output order.
inline constexpr std::array<std::string_view, 9> kMetricNames{
    "resource_score_cpu",      "resource_score_llc",      "resource_score_mbw",
    "perf_score",              "buoyancy_score",          "node_buoyancy",
    "node_resource_score_cpu", "node_resource_score_llc", "node_resource_score_mbw",
};

// Shortest decimal that round-trips to the same double; NaN/+Inf/-Inf as
// OpenMetrics spells them.
std::string format_metric_value(double v);

std::string escape_label_value(std::string_view v);

// OpenMetrics text for one report, terminated by "# EOF". A null report
// renders the family headers only.
std::string render_openmetrics(const NodeReport* report);

}  // namespace buoyancy
