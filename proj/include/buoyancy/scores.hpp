#pragma once

#include <span>

#include "buoyancy/model.hpp"

namespace buoyancy {

/**
 * Power-law miss-ratio curve f(x) = coeff_a * x^exponent_b, x in KiB.
 *
 * A degenerate fit has exponent_b == 0 and marks a curve that could not be
 * fitted as decreasing (flat or rising ratios, zero or non-finite ratios).
 */
struct MrcFit {
  double coeff_a = 1;
  double exponent_b = 0;
  bool degenerate = true;

  double operator()(double size_kib) const;
  double derivative(double size_kib) const;
};

struct MissRatios {
  double l1 = 0;
  double l2 = 0;
  double l3 = 0;
};

// min(T_user / T_alloc, 1). Throws ZeroAllocation when T_alloc <= 0.
double cpu_score(const TelemetrySample& sample);

// Throws NoMemoryTraffic when mem_refs == 0.
MissRatios miss_ratios(const TelemetrySample& sample);

// Ordinary least squares of ln(ratio) on ln(size). Needs at least two points
// with distinct sizes; never throws on bad ratios, those yield a degenerate fit.
MrcFit fit_mrc(std::span<const double> sizes_kib, std::span<const double> ratios);

// Fits the (L1, L2, LLC) points. The LLC point sits at llc_alloc_kib when
// given, otherwise at the full L3 size.
MrcFit fit_mrc(const CacheTopology& topology, const MissRatios& ratios,
               std::optional<double> llc_alloc_kib = std::nullopt);

/**
 * Cache sensitivity: the miss-ratio change for one way of extra LLC at the
 * current allocation, relative to the measured LLC miss ratio m_llc,
 * clamped to 1. Degenerate fits and m_llc <= 0 give 0.
 */
double llc_score(const MrcFit& fit, const CacheTopology& topology,
                 double s_llc_kib, double m_llc);

// Fraction of the allocated (or theoretical peak) bandwidth in use.
double mbw_score(const TelemetrySample& sample, const CacheTopology& topology);

// cpu, llc and mbw for one window. Windows without memory references score
// llc = 0.
ResourceScores score_workload(const TelemetrySample& sample,
                              const CacheTopology& topology);

}  // namespace buoyancy
