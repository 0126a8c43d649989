#include "buoyancy/model.hpp"

#include <cmath>

namespace buoyancy {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonIncreasingCacheSizes: return "NonIncreasingCacheSizes";
    case ErrorCode::NonPositiveGeometry: return "NonPositiveGeometry";
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::ZeroAllocation: return "ZeroAllocation";
    case ErrorCode::NoMemoryTraffic: return "NoMemoryTraffic";
    case ErrorCode::InvalidSlo: return "InvalidSlo";
    case ErrorCode::EmptyScoreSet: return "EmptyScoreSet";
    case ErrorCode::EmptyNode: return "EmptyNode";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::BindError: return "BindError";
  }
  return "Unknown";
}

CacheTopology xeon_4309y_topology() {
  return CacheTopology{
      .l1_size_kib = 48 + 32,
      .l2_size_kib = 1280,
      .l3_size_kib = 12 * 1024,
      .l3_ways = 12,
      .mem_speed_mts = 2666,
      .mem_bus_width_bytes = 8,
      .mem_channels = 4,
  };
}

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0; }

}  // namespace

const CacheTopology& validate_topology(const CacheTopology& t) {
  if (!positive(t.l1_size_kib) || !positive(t.l2_size_kib) ||
      !positive(t.l3_size_kib) || t.l3_ways == 0 ||
      !positive(t.mem_speed_mts) || !positive(t.mem_bus_width_bytes) ||
      t.mem_channels == 0) {
    throw Error(ErrorCode::NonPositiveGeometry,
                "all cache and memory geometry fields must be > 0");
  }
  if (!(t.l1_size_kib < t.l2_size_kib && t.l2_size_kib < t.l3_size_kib)) {
    throw Error(ErrorCode::NonIncreasingCacheSizes,
                "expected l1_size_kib < l2_size_kib < l3_size_kib");
  }
  return t;
}

double theoretical_max_mbw(const CacheTopology& t) {
  return t.mem_speed_mts * 1e6 * t.mem_bus_width_bytes *
         static_cast<double>(t.mem_channels);
}

double llc_way_size(const CacheTopology& t) {
  return t.l3_size_kib / static_cast<double>(t.l3_ways);
}

const SloSpec& validate_slo(const SloSpec& slo) {
  if (slo.slo_value && !positive(*slo.slo_value)) {
    throw Error(ErrorCode::InvalidSlo,
                "slo_value for '" + slo.kpi_name + "' must be > 0");
  }
  return slo;
}

const TelemetrySample& validate_sample(const TelemetrySample& s) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvalidSample, s.workload_id + ": " + what);
  };
  if (s.workload_id.empty()) fail("empty workload_id");
  if (!(s.window_end > s.window_start)) fail("window_end must follow window_start");
  auto non_negative = [](double v) { return std::isfinite(v) && v >= 0; };
  if (!non_negative(s.cpu_user_time_s)) fail("cpu_user_time_s must be >= 0");
  if (!non_negative(s.cpu_alloc_cores)) fail("cpu_alloc_cores must be >= 0");
  if (s.mbw_alloc_bytes_per_s && !std::isfinite(*s.mbw_alloc_bytes_per_s))
    fail("mbw_alloc_bytes_per_s must be finite");
  if (s.llc_alloc_kib && !positive(*s.llc_alloc_kib))
    fail("llc_alloc_kib must be > 0");
  if (s.kpi_value && !non_negative(*s.kpi_value)) fail("kpi_value must be >= 0");
  return s;
}

std::vector<double> ResourceScores::values() const {
  std::vector<double> out{cpu, llc, mbw};
  for (const auto& [name, v] : extra) out.push_back(v);
  return out;
}

}  // namespace buoyancy
