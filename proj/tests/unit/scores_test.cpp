#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "buoyancy/error.hpp"
#include "buoyancy/scores.hpp"
#include "oracles.hpp"

using namespace buoyancy;
using namespace std::chrono_literals;

namespace {

TelemetrySample sample(double user_s, double cores, double window_s = 1.0) {
  TelemetrySample s;
  s.workload_id = "w";
  s.window_start = Timestamp{std::chrono::seconds(1'700'000'000)};
  s.window_end = s.window_start + std::chrono::duration_cast<std::chrono::microseconds>(
                                      Seconds(window_s));
  s.cpu_user_time_s = user_s;
  s.cpu_alloc_cores = cores;
  return s;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

const std::array<double, 3> kSizes{80, 1280, 12288};

}  // namespace

TEST(CpuScore, Ratio) {
  EXPECT_DOUBLE_EQ(cpu_score(sample(0.5, 2)), 0.25);
  EXPECT_EQ(cpu_score(sample(0, 2)), 0);
  EXPECT_EQ(cpu_score(sample(2.2, 2)), 1.0);
}

TEST(CpuScore, ZeroAllocation) {
  EXPECT_EQ(code_of([] { cpu_score(sample(0.5, 0)); }), ErrorCode::ZeroAllocation);
}

TEST(CpuScore, UnitInvariance) {
  for (double k : {0.1, 2.0, 7.5, 60.0}) {
    EXPECT_NEAR(cpu_score(sample(0.3 * k, 1.5, k)), cpu_score(sample(0.3, 1.5)), 1e-12);
  }
}

TEST(MissRatios, Division) {
  TelemetrySample s = sample(0, 1);
  s.mem_refs = 1'000'000;
  s.l1_miss = 111800;
  s.l2_miss = 27950;
  s.l3_miss = 9021;
  const MissRatios m = miss_ratios(s);
  EXPECT_DOUBLE_EQ(m.l1, 0.1118);
  EXPECT_DOUBLE_EQ(m.l2, 0.02795);
  EXPECT_DOUBLE_EQ(m.l3, 0.009021);

  s.mem_refs = 100;
  s.l1_miss = s.l2_miss = s.l3_miss = 0;
  const MissRatios z = miss_ratios(s);
  EXPECT_EQ(z.l1, 0);
  EXPECT_EQ(z.l2, 0);
  EXPECT_EQ(z.l3, 0);

  s.mem_refs = 0;
  EXPECT_EQ(code_of([&] { miss_ratios(s); }), ErrorCode::NoMemoryTraffic);
}

TEST(FitMrc, RecoversInverseSquareRoot) {
  std::array<double, 3> exact{};
  for (int i = 0; i < 3; ++i) exact[i] = 1 / std::sqrt(kSizes[i]);
  const MrcFit fit = fit_mrc(kSizes, exact);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.coeff_a, 1.0, 1e-12);
  EXPECT_NEAR(fit.exponent_b, -0.5, 1e-12);
  // Seven-digit ratios: 0.0090214 is 3e-5 above 12288^-0.5, which limits
  // how closely the generator comes back.
  const std::array<double, 3> rounded{0.1118034, 0.0279508, 0.0090214};
  const MrcFit approx = fit_mrc(kSizes, rounded);
  EXPECT_NEAR(approx.coeff_a, 1.0, 1e-4);
  EXPECT_NEAR(approx.exponent_b, -0.5, 1e-5);
}

TEST(FitMrc, FlatCurveIsDegenerate) {
  const std::array<double, 3> m{0.1, 0.1, 0.1};
  const MrcFit fit = fit_mrc(kSizes, m);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.exponent_b, 0);
}

TEST(FitMrc, RisingOrZeroRatiosAreDegenerate) {
  EXPECT_TRUE(fit_mrc(kSizes, std::array<double, 3>{0.01, 0.05, 0.2}).degenerate);
  EXPECT_TRUE(fit_mrc(kSizes, std::array<double, 3>{0.2, 0.05, 0.0}).degenerate);
  EXPECT_TRUE(fit_mrc(kSizes, std::array<double, 3>{0.2, NAN, 0.01}).degenerate);
  EXPECT_EQ(fit_mrc(kSizes, std::array<double, 3>{0.2, 0.05, 0.0}).exponent_b, 0);
}

TEST(FitMrc, MatchesNormalEquationOracle) {
  const std::array<double, 3> m{0.2, 0.05, 0.02};
  std::array<double, 3> lx{}, ly{};
  for (int i = 0; i < 3; ++i) {
    lx[i] = std::log(kSizes[i]);
    ly[i] = std::log(m[i]);
  }
  const auto [intercept, slope] = oracle::ols_normal_equations(lx, ly);
  const MrcFit fit = fit_mrc(kSizes, m);
  EXPECT_NEAR(fit.exponent_b, static_cast<double>(slope), 1e-12);
  EXPECT_NEAR(fit.coeff_a, static_cast<double>(std::exp(intercept)), 1e-12);
  // Same numbers from an external least-squares package, frozen.
  EXPECT_NEAR(fit.coeff_a, 1.4426029938913214, 1e-12);
  EXPECT_NEAR(fit.exponent_b, -0.4589572450922021, 1e-12);
}

TEST(FitMrc, NeedsTwoDistinctSizes) {
  const std::array<double, 1> one{80};
  const std::array<double, 1> r{0.1};
  EXPECT_EQ(code_of([&] { fit_mrc(one, r); }), ErrorCode::InvalidArgument);
  const std::array<double, 2> same{80, 80};
  const std::array<double, 2> r2{0.1, 0.05};
  EXPECT_EQ(code_of([&] { fit_mrc(same, r2); }), ErrorCode::InvalidArgument);
}

TEST(FitMrc, RandomPowerLawsRecoveredTightly) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.01, 10), ub(-2, -0.05);
  for (int i = 0; i < 200; ++i) {
    const double a = ua(rng), b = ub(rng);
    std::array<double, 3> m{};
    for (int k = 0; k < 3; ++k) m[k] = a * std::pow(kSizes[k], b);
    const MrcFit fit = fit_mrc(kSizes, m);
    ASSERT_FALSE(fit.degenerate);
    EXPECT_NEAR(fit.coeff_a / a, 1, 1e-9);
    EXPECT_NEAR(fit.exponent_b / b, 1, 1e-9);
  }
}

TEST(FitMrc, UsesLlcAllocationAsThirdPoint) {
  const CacheTopology t = xeon_4309y_topology();
  MissRatios m{std::pow(80.0, -0.5), std::pow(1280.0, -0.5), std::pow(4096.0, -0.5)};
  const MrcFit fit = fit_mrc(t, m, 4096.0);
  EXPECT_NEAR(fit.exponent_b, -0.5, 1e-12);
  EXPECT_NEAR(fit.coeff_a, 1, 1e-12);
  EXPECT_GT(std::abs(fit_mrc(t, m).exponent_b + 0.5), 1e-3);
}

TEST(FitMrc, DerivativeAgreesWithFiniteDifference) {
  const MrcFit fit{.coeff_a = 1.7, .exponent_b = -0.8, .degenerate = false};
  for (double x : {100.0, 1000.0, 9000.0}) {
    const double fd = oracle::central_difference([&](double v) { return fit(v); }, x, 1e-3 * x);
    EXPECT_NEAR(fit.derivative(x) / fd, 1, 1e-6);
  }
}

TEST(LlcScore, ExactPowerLaw) {
  const CacheTopology t = xeon_4309y_topology();
  const MrcFit fit{.coeff_a = 1, .exponent_b = -0.5, .degenerate = false};
  EXPECT_NEAR(llc_score(fit, t, 12288, 0.0090214), 0.0416667, 1e-5);
  EXPECT_NEAR(llc_score(fit, t, 12288, fit(12288)), 0.041666666666666664, 1e-15);
}

TEST(LlcScore, ClampsAtOne) {
  CacheTopology t{.l1_size_kib = 16, .l2_size_kib = 128, .l3_size_kib = 1024, .l3_ways = 1,
                  .mem_speed_mts = 2666, .mem_bus_width_bytes = 8, .mem_channels = 4};
  const MrcFit fit{.coeff_a = 3, .exponent_b = -1.5, .degenerate = false};
  EXPECT_EQ(llc_score(fit, t, 1024, fit(1024)), 1.0);
}

TEST(LlcScore, DegenerateInputsGiveZero) {
  const CacheTopology t = xeon_4309y_topology();
  EXPECT_EQ(llc_score(MrcFit{}, t, 12288, 0.01), 0);
  const MrcFit fit{.coeff_a = 1, .exponent_b = -0.5, .degenerate = false};
  EXPECT_EQ(llc_score(fit, t, 12288, 0), 0);
}

TEST(LlcScore, NonIncreasingInAllocation) {
  const CacheTopology t = xeon_4309y_topology();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ub(-0.99, -0.01), us(64, 12288);
  for (int i = 0; i < 500; ++i) {
    const MrcFit fit{.coeff_a = 1, .exponent_b = ub(rng), .degenerate = false};
    double s1 = us(rng), s2 = us(rng);
    if (s1 > s2) std::swap(s1, s2);
    EXPECT_GE(llc_score(fit, t, s1, 0.01), llc_score(fit, t, s2, 0.01));
  }
}

TEST(MbwScore, AgainstPeakAndAllocation) {
  const CacheTopology t = xeon_4309y_topology();
  TelemetrySample s = sample(0, 1);
  s.mbw_bytes = 21'328'000'000;
  EXPECT_DOUBLE_EQ(mbw_score(s, t), 0.25);
  s.mbw_bytes = 0;
  EXPECT_EQ(mbw_score(s, t), 0);
  s.mbw_bytes = 2000;
  s.mbw_alloc_bytes_per_s = 1000;
  EXPECT_EQ(mbw_score(s, t), 1.0);
  s.mbw_alloc_bytes_per_s = 0;
  EXPECT_EQ(code_of([&] { mbw_score(s, t); }), ErrorCode::ZeroAllocation);
}

TEST(ScoreWorkload, Composition) {
  const CacheTopology t = xeon_4309y_topology();
  TelemetrySample s = sample(0.5, 2);
  s.mem_refs = 1'000'000;
  s.l1_miss = 111803;
  s.l2_miss = 27951;
  s.l3_miss = 9021;
  s.mbw_bytes = 21'328'000'000;
  const ResourceScores r = score_workload(s, t);
  EXPECT_DOUBLE_EQ(r.cpu, 0.25);
  EXPECT_NEAR(r.llc, 0.0417, 5e-5);
  EXPECT_DOUBLE_EQ(r.mbw, 0.25);
}

TEST(ScoreWorkload, IdleIsZero) {
  TelemetrySample s = sample(0, 2);
  const ResourceScores r = score_workload(s, xeon_4309y_topology());
  EXPECT_EQ(r.cpu, 0);
  EXPECT_EQ(r.llc, 0);
  EXPECT_EQ(r.mbw, 0);
}

TEST(ScoreWorkload, SaturatedIsOne) {
  // Steep curve f(x) = 64 x^-1.5 on a one-way 1 MiB LLC.
  CacheTopology t{.l1_size_kib = 16, .l2_size_kib = 128, .l3_size_kib = 1024, .l3_ways = 1,
                  .mem_speed_mts = 1000, .mem_bus_width_bytes = 1, .mem_channels = 1};
  TelemetrySample s = sample(2, 2);
  s.mem_refs = 1'000'000'000;
  s.l1_miss = 1'000'000'000;
  s.l2_miss = static_cast<std::uint64_t>(std::llround(1e9 * 64 * std::pow(128.0, -1.5)));
  s.l3_miss = static_cast<std::uint64_t>(std::llround(1e9 * 64 * std::pow(1024.0, -1.5)));
  s.mbw_bytes = 1'000'000'000;
  const ResourceScores r = score_workload(s, t);
  EXPECT_EQ(r.cpu, 1);
  EXPECT_EQ(r.llc, 1);
  EXPECT_EQ(r.mbw, 1);
}

TEST(ScoreWorkload, NoTrafficKeepsCpuAndMbw) {
  TelemetrySample s = sample(1, 2);
  s.mbw_bytes = 21'328'000'000;
  const ResourceScores r = score_workload(s, xeon_4309y_topology());
  EXPECT_DOUBLE_EQ(r.cpu, 0.5);
  EXPECT_EQ(r.llc, 0);
  EXPECT_DOUBLE_EQ(r.mbw, 0.25);
}

TEST(ScoreWorkload, FuzzStaysInUnitInterval) {
  const CacheTopology t = xeon_4309y_topology();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20000; ++i) {
    TelemetrySample s = sample(u(rng) * 10, 0.1 + u(rng) * 8, 0.1 + u(rng) * 5);
    s.mem_refs = static_cast<std::uint64_t>(u(rng) * 1e9);
    // Counters need not be consistent with each other.
    s.l1_miss = static_cast<std::uint64_t>(u(rng) * 1e9);
    s.l2_miss = static_cast<std::uint64_t>(u(rng) * 1e9);
    s.l3_miss = static_cast<std::uint64_t>(u(rng) * 1e9);
    s.mbw_bytes = static_cast<std::uint64_t>(u(rng) * 1e12);
    if (u(rng) < 0.3) s.llc_alloc_kib = 1281 + u(rng) * 11000;
    if (u(rng) < 0.3) s.mbw_alloc_bytes_per_s = 1 + u(rng) * 1e11;
    const ResourceScores r = score_workload(s, t);
    for (double v : r.values()) {
      ASSERT_GE(v, 0);
      ASSERT_LE(v, 1);
    }
  }
}
