#include "buoyancy/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "buoyancy/exposition.hpp"

namespace buoyancy {

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::InsufficientData, "median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
}

HeadroomTable headroom_table(std::span<const SegmentMedians> medians) {
  if (medians.empty()) {
    throw Error(ErrorCode::InsufficientData, "no workloads to compare");
  }
  HeadroomTable table;
  double sum_p95 = 0;
  double sum_b = 0;
  for (const auto& m : medians) {
    HeadroomRow row{.medians = m};
    row.p95_log_change = log_change(m.low_p95_ms, m.high_p95_ms);
    row.buoyancy_log_change = log_change(m.low_buoyancy, m.high_buoyancy);
    row.p95_change_pct = (m.high_p95_ms / m.low_p95_ms - 1) * 100;
    row.buoyancy_change_pct = (m.high_buoyancy / m.low_buoyancy - 1) * 100;
    sum_p95 += row.p95_log_change;
    sum_b += row.buoyancy_log_change;
    table.rows.push_back(row);
  }
  const double n = static_cast<double>(medians.size());
  table.mean_p95_log_change = sum_p95 / n;
  table.mean_buoyancy_log_change = sum_b / n;
  const double lat = std::abs(table.mean_p95_log_change);
  const double buoy = std::abs(table.mean_buoyancy_log_change);
  if (lat == 0) {
    table.actuation_gap = buoy == 0 ? 0 : std::numeric_limits<double>::infinity();
  } else {
    table.actuation_gap = buoy / lat - 1;
  }
  return table;
}

std::vector<SegmentMedians> segment_medians(
    const std::vector<std::vector<ReplayRecord>>& windows, Engine& engine) {
  struct Series {
    std::vector<double> p95;
    std::vector<double> buoyancy;
  };
  // workload -> segment -> series
  std::map<std::string, std::map<std::string, Series>> series;
  std::set<std::string> segments;

  for (const auto& records : windows) {
    std::vector<TelemetrySample> batch;
    for (const auto& r : records) batch.push_back(r.sample);
    const NodeReport report = engine.step(batch);
    for (const auto& r : records) {
      if (!r.segment) continue;
      segments.insert(*r.segment);
      const auto it = std::find_if(
          report.workload_reports.begin(), report.workload_reports.end(),
          [&](const auto& w) { return w.workload_id == r.sample.workload_id; });
      Series& s = series[r.sample.workload_id][*r.segment];
      if (r.sample.kpi_value) s.p95.push_back(*r.sample.kpi_value);
      s.buoyancy.push_back(it->buoyancy);
    }
  }
  if (!segments.contains("low") || !segments.contains("high")) {
    throw Error(ErrorCode::InsufficientData,
                "replay needs windows labelled both \"low\" and \"high\"");
  }

  std::vector<SegmentMedians> out;
  for (const auto& [id, by_segment] : series) {
    const auto low = by_segment.find("low");
    const auto high = by_segment.find("high");
    if (low == by_segment.end() || high == by_segment.end()) continue;
    if (low->second.p95.empty() || high->second.p95.empty()) continue;
    out.push_back(SegmentMedians{
        .workload_id = id,
        .low_p95_ms = median(low->second.p95),
        .high_p95_ms = median(high->second.p95),
        .low_buoyancy = median(low->second.buoyancy),
        .high_buoyancy = median(high->second.buoyancy),
    });
  }
  if (out.empty()) {
    throw Error(ErrorCode::InsufficientData,
                "no workload has KPI data in both segments");
  }
  return out;
}

namespace {

constexpr std::string_view kMediansHeader =
    "workload,low_p95_ms,high_p95_ms,low_buoyancy,high_buoyancy";

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

bool looks_like_medians_csv(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  return in && std::getline(in, header) && trim(header) == kMediansHeader;
}

std::vector<SegmentMedians> read_medians_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != kMediansHeader) {
    throw ParseError(1, "expected header '" + std::string(kMediansHeader) + "'");
  }
  std::vector<SegmentMedians> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 5) throw ParseError(line_no, "expected 5 columns");
    std::array<double, 4> values{};
    for (std::size_t i = 0; i < 4; ++i) {
      std::size_t used = 0;
      try {
        values[i] = std::stod(cells[i + 1], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[i + 1].size()) {
        throw ParseError(line_no, "not a number: '" + cells[i + 1] + "'");
      }
    }
    out.push_back({cells[0], values[0], values[1], values[2], values[3]});
  }
  return out;
}

std::string format_headroom_csv(const HeadroomTable& t) {
  std::string out =
      "workload,low_p95_ms,high_p95_ms,p95_change_pct,p95_log_change,"
      "low_buoyancy,high_buoyancy,buoyancy_change_pct,buoyancy_log_change\n";
  for (const auto& r : t.rows) {
    const auto& m = r.medians;
    for (const std::string& cell :
         {m.workload_id, format_metric_value(m.low_p95_ms),
          format_metric_value(m.high_p95_ms), format_metric_value(r.p95_change_pct),
          format_metric_value(r.p95_log_change), format_metric_value(m.low_buoyancy),
          format_metric_value(m.high_buoyancy),
          format_metric_value(r.buoyancy_change_pct)}) {
      out += cell + ",";
    }
    out += format_metric_value(r.buoyancy_log_change) + "\n";
  }
  out += "mean,,,," + format_metric_value(t.mean_p95_log_change) + ",,,," +
         format_metric_value(t.mean_buoyancy_log_change) + "\n";
  out += "actuation_gap,,,,,,,," + format_metric_value(t.actuation_gap) + "\n";
  return out;
}

std::string format_headroom_text(const HeadroomTable& t) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %9s %9s %9s %8s | %7s %7s %9s %8s\n",
                "workload", "p95 lo", "p95 hi", "chg %", "log-chg", "b lo",
                "b hi", "chg %", "log-chg");
  out += buf;
  for (const auto& r : t.rows) {
    const auto& m = r.medians;
    std::snprintf(buf, sizeof buf,
                  "%-12s %9.2f %9.2f %9.1f %8.2f | %7.2f %7.2f %9.1f %8.2f\n",
                  m.workload_id.c_str(), m.low_p95_ms, m.high_p95_ms,
                  r.p95_change_pct, r.p95_log_change, m.low_buoyancy,
                  m.high_buoyancy, r.buoyancy_change_pct, r.buoyancy_log_change);
    out += buf;
  }
  std::snprintf(buf, sizeof buf,
                "mean log-change: p95 %.3f, buoyancy %.3f; buoyancy actuation "
                "%.1f%% larger\n",
                t.mean_p95_log_change, t.mean_buoyancy_log_change,
                t.actuation_gap * 100);
  out += buf;
  return out;
}

std::vector<double> surface_axis(double step) {
  if (!(step > 0 && step <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "grid step must lie in (0, 0.5]");
  }
  std::vector<double> axis;
  const double divisions = std::round(1 / step);
  if (std::abs(divisions * step - 1) < 1e-9) {
    // i / n keeps grid points such as 0.5 and 0.8 identical to their literals.
    const auto n = static_cast<int>(divisions);
    for (int i = 0; i <= n; ++i) axis.push_back(static_cast<double>(i) / n);
  } else {
    for (int i = 0; i * step <= 1 + 1e-12; ++i) {
      axis.push_back(std::min(i * step, 1.0));
    }
  }
  return axis;
}

std::vector<SurfacePoint> buoyancy_surface(
    double alpha, double step, double threshold,
    const std::vector<std::optional<double>>& second_scores) {
  const std::vector<double> axis = surface_axis(step);
  std::vector<SurfacePoint> points;
  for (const auto& second : second_scores) {
    for (double p : axis) {
      for (double r : axis) {
        std::vector<double> scores{r};
        if (second) scores.push_back(*second);
        const double b = buoyancy(p, std::span<const double>(scores), alpha);
        points.push_back({second, p, r, b, b <= threshold});
      }
    }
  }
  return points;
}

std::string format_surface_csv(const std::vector<SurfacePoint>& points) {
  std::string out = "second_score,perf_score,resource_score,buoyancy,approaching_violation\n";
  for (const auto& pt : points) {
    out += (pt.second_score ? format_metric_value(*pt.second_score) : "none") + "," +
           format_metric_value(pt.perf) + "," + format_metric_value(pt.score) + "," +
           format_metric_value(pt.buoyancy) + "," +
           (pt.approaching_violation ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace buoyancy
