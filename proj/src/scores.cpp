#include "buoyancy/scores.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace buoyancy {

namespace {

double clamp_unit(double v) {
  if (!(v > 0)) return 0;  // also maps NaN to 0
  return std::min(v, 1.0);
}

}  // namespace

double MrcFit::operator()(double size_kib) const {
  return coeff_a * std::pow(size_kib, exponent_b);
}

double MrcFit::derivative(double size_kib) const {
  return coeff_a * exponent_b * std::pow(size_kib, exponent_b - 1);
}

double cpu_score(const TelemetrySample& sample) {
  const double window = sample.window_seconds();
  const double t_alloc = sample.cpu_alloc_cores * window;
  if (!(window > 0) || !(sample.cpu_alloc_cores > 0) || !(t_alloc > 0)) {
    throw Error(ErrorCode::ZeroAllocation,
                sample.workload_id + ": no CPU time allocated in window");
  }
  return clamp_unit(sample.cpu_user_time_s / t_alloc);
}

MissRatios miss_ratios(const TelemetrySample& sample) {
  if (sample.mem_refs == 0) {
    throw Error(ErrorCode::NoMemoryTraffic,
                sample.workload_id + ": mem_refs is 0");
  }
  const auto refs = static_cast<double>(sample.mem_refs);
  return MissRatios{
      .l1 = static_cast<double>(sample.l1_miss) / refs,
      .l2 = static_cast<double>(sample.l2_miss) / refs,
      .l3 = static_cast<double>(sample.l3_miss) / refs,
  };
}

MrcFit fit_mrc(std::span<const double> sizes_kib,
               std::span<const double> ratios) {
  if (sizes_kib.size() != ratios.size() || sizes_kib.size() < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "fit_mrc needs >= 2 (size, ratio) pairs of equal length");
  }
  const std::size_t n = sizes_kib.size();
  std::vector<double> log_x(n);
  std::vector<double> log_m(n);
  bool ratios_usable = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sizes_kib[i] > 0) || !std::isfinite(sizes_kib[i])) {
      throw Error(ErrorCode::InvalidArgument, "cache sizes must be > 0");
    }
    log_x[i] = std::log(sizes_kib[i]);
    if (!(ratios[i] > 0) || !std::isfinite(ratios[i])) {
      ratios_usable = false;
    } else {
      log_m[i] = std::log(ratios[i]);
    }
  }
  if (!ratios_usable) return MrcFit{};

  double mean_x = 0;
  double mean_m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += log_x[i];
    mean_m += log_m[i];
  }
  mean_x /= static_cast<double>(n);
  mean_m /= static_cast<double>(n);

  double sxy = 0;
  double sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = log_x[i] - mean_x;
    sxy += dx * (log_m[i] - mean_m);
    sxx += dx * dx;
  }
  if (!(sxx > 0)) {
    throw Error(ErrorCode::InvalidArgument,
                "fit_mrc needs at least two distinct cache sizes");
  }
  const double slope = sxy / sxx;
  const double intercept = mean_m - slope * mean_x;

  MrcFit fit;
  fit.coeff_a = std::exp(intercept);
  if (!std::isfinite(fit.coeff_a) || !(fit.coeff_a > 0)) fit.coeff_a = 1;
  if (slope < 0 && std::isfinite(slope)) {
    fit.exponent_b = slope;
    fit.degenerate = false;
  }
  return fit;
}

MrcFit fit_mrc(const CacheTopology& topology, const MissRatios& ratios,
               std::optional<double> llc_alloc_kib) {
  const std::array<double, 3> sizes{
      topology.l1_size_kib, topology.l2_size_kib,
      llc_alloc_kib.value_or(topology.l3_size_kib)};
  const std::array<double, 3> m{ratios.l1, ratios.l2, ratios.l3};
  return fit_mrc(sizes, m);
}

double llc_score(const MrcFit& fit, const CacheTopology& topology,
                 double s_llc_kib, double m_llc) {
  if (fit.degenerate || !(m_llc > 0) || !(s_llc_kib > 0)) return 0;
  const double sensitivity = -fit.derivative(s_llc_kib) * llc_way_size(topology);
  return clamp_unit(sensitivity / m_llc);
}

double mbw_score(const TelemetrySample& sample, const CacheTopology& topology) {
  const double window = sample.window_seconds();
  if (!(window > 0)) {
    throw Error(ErrorCode::ZeroAllocation,
                sample.workload_id + ": empty observation window");
  }
  double allocated = theoretical_max_mbw(topology);
  if (sample.mbw_alloc_bytes_per_s) {
    allocated = *sample.mbw_alloc_bytes_per_s;
    if (!(allocated > 0)) {
      throw Error(ErrorCode::ZeroAllocation,
                  sample.workload_id + ": mbw_alloc_bytes_per_s must be > 0");
    }
  }
  return clamp_unit(sample.mbw_bytes_per_s() / allocated);
}

ResourceScores score_workload(const TelemetrySample& sample,
                              const CacheTopology& topology) {
  ResourceScores scores;
  scores.cpu = cpu_score(sample);
  scores.mbw = mbw_score(sample, topology);
  if (sample.mem_refs > 0) {
    const MissRatios ratios = miss_ratios(sample);
    const MrcFit fit = fit_mrc(topology, ratios, sample.llc_alloc_kib);
    scores.llc = llc_score(fit, topology,
                           sample.llc_alloc_kib.value_or(topology.l3_size_kib),
                           ratios.l3);
  }
  return scores;
}

}  // namespace buoyancy
