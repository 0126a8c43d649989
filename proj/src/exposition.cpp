#include "buoyancy/exposition.hpp"

#include <charconv>
#include <cmath>
#include <functional>

namespace buoyancy {

std::string format_metric_value(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "+Inf" : "-Inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

std::string escape_label_value(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

struct Family {
  std::string_view name;
  std::string_view help;
  // Per-workload families read a BuoyancyReport, node families the report.
  std::function<double(const BuoyancyReport&)> per_workload;
  std::function<double(const NodeReport&)> per_node;
};

const std::array<Family, kMetricNames.size()>& families() {
  static const std::array<Family, kMetricNames.size()> f{{
      {kMetricNames[0], "Workload CPU resource score in [0, 1].",
       [](const BuoyancyReport& r) { return r.resource_scores.cpu; }, {}},
      {kMetricNames[1], "Workload LLC sensitivity score in [0, 1].",
       [](const BuoyancyReport& r) { return r.resource_scores.llc; }, {}},
      {kMetricNames[2], "Workload memory bandwidth score in [0, 1].",
       [](const BuoyancyReport& r) { return r.resource_scores.mbw; }, {}},
      {kMetricNames[3], "Relative SLO slack of the workload KPI.",
       [](const BuoyancyReport& r) { return r.perf_score; }, {}},
      {kMetricNames[4], "Workload buoyancy headroom score.",
       [](const BuoyancyReport& r) { return r.buoyancy; }, {}},
      {kMetricNames[5], "Node buoyancy over all hosted workloads.", {},
       [](const NodeReport& n) { return n.node_buoyancy; }},
      {kMetricNames[6], "Node CPU resource score in [0, 1].", {},
       [](const NodeReport& n) { return n.node_resource_scores.cpu; }},
      {kMetricNames[7], "Node LLC resource score in [0, 1].", {},
       [](const NodeReport& n) { return n.node_resource_scores.llc; }},
      {kMetricNames[8], "Node memory bandwidth score in [0, 1].", {},
       [](const NodeReport& n) { return n.node_resource_scores.mbw; }},
  }};
  return f;
}

}  // namespace

std::string render_openmetrics(const NodeReport* report) {
  std::string out;
  for (const Family& f : families()) {
    out.append("# TYPE ").append(f.name).append(" gauge\n");
    out.append("# HELP ").append(f.name).append(" ").append(f.help).append("\n");
    if (report == nullptr) continue;
    if (f.per_workload) {
      for (const auto& w : report->workload_reports) {
        out.append(f.name)
            .append("{workload_id=\"")
            .append(escape_label_value(w.workload_id))
            .append("\"} ")
            .append(format_metric_value(f.per_workload(w)))
            .append("\n");
      }
    } else {
      out.append(f.name).append(" ").append(format_metric_value(f.per_node(*report)))
          .append("\n");
    }
  }
  out.append("# EOF\n");
  return out;
}

}  // namespace buoyancy
