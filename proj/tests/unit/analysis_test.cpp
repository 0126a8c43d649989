#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "buoyancy/analysis.hpp"
#include "buoyancy/error.hpp"

using namespace buoyancy;

namespace {

std::vector<SegmentMedians> table3() {
  return read_medians_csv(BUOYANCY_DATA_DIR "/table3_medians.csv");
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

TelemetrySample sample(const std::string& id, int window, double kpi) {
  TelemetrySample s;
  s.workload_id = id;
  s.window_start = Timestamp{std::chrono::seconds(window)};
  s.window_end = s.window_start + std::chrono::seconds(1);
  s.cpu_user_time_s = 0.2;
  s.cpu_alloc_cores = 1;
  s.kpi_value = kpi;
  return s;
}

}  // namespace

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_EQ(code_of([] { median({}); }), ErrorCode::InsufficientData);
}

TEST(Headroom, MosesRow) {
  const std::vector<SegmentMedians> m{{"moses", 8.54, 11.43, 0.42, 0.23}};
  const HeadroomTable t = headroom_table(m);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.rows[0].p95_log_change, 0.29, 0.005);
  EXPECT_NEAR(t.rows[0].buoyancy_log_change, -0.60, 0.005);
  EXPECT_NEAR(t.rows[0].p95_change_pct, 33.8, 0.05);
  EXPECT_NEAR(t.rows[0].buoyancy_change_pct, -45.2, 0.05);
}

TEST(Headroom, IdenticalSegmentsNoChange) {
  const std::vector<SegmentMedians> m{{"w", 7, 7, 0.3, 0.3}};
  const HeadroomTable t = headroom_table(m);
  EXPECT_EQ(t.rows[0].p95_log_change, 0);
  EXPECT_EQ(t.rows[0].buoyancy_log_change, 0);
  EXPECT_EQ(t.rows[0].p95_change_pct, 0);
  EXPECT_EQ(t.rows[0].buoyancy_change_pct, 0);
  EXPECT_EQ(t.actuation_gap, 0);
}

TEST(Headroom, FullTableMeansAndGap) {
  const auto rows = table3();
  ASSERT_EQ(rows.size(), 5u);
  const HeadroomTable t = headroom_table(rows);
  EXPECT_NEAR(t.mean_p95_log_change, 0.654, 0.005);
  EXPECT_NEAR(t.mean_buoyancy_log_change, -0.78, 0.005);
  EXPECT_NEAR(t.actuation_gap * 100, 19.3, 0.5);
  // Gap from its definition, recomputed by hand from the rows.
  double lat = 0, b = 0;
  for (const auto& r : rows) {
    lat += std::log(r.high_p95_ms / r.low_p95_ms);
    b += std::log(r.high_buoyancy / r.low_buoyancy);
  }
  EXPECT_NEAR(t.actuation_gap, std::abs(b) / std::abs(lat) - 1, 1e-12);
}

TEST(Headroom, Errors) {
  EXPECT_EQ(code_of([] { headroom_table({}); }), ErrorCode::InsufficientData);
  const std::vector<SegmentMedians> neg{{"w", 5, 6, -0.1, 0.2}};
  EXPECT_EQ(code_of([&] { headroom_table(neg); }), ErrorCode::NonPositiveInput);
}

TEST(Headroom, CsvAndTextOutput) {
  const HeadroomTable t = headroom_table(table3());
  const std::string csv = format_headroom_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "workload,low_p95_ms,high_p95_ms,p95_change_pct,p95_log_change,"
            "low_buoyancy,high_buoyancy,buoyancy_change_pct,buoyancy_log_change");
  EXPECT_NE(csv.find("\nmoses,8.54,11.43,"), std::string::npos);
  EXPECT_NE(csv.find("\nactuation_gap,"), std::string::npos);
  const std::string text = format_headroom_text(t);
  EXPECT_NE(text.find("moses"), std::string::npos);
  EXPECT_NE(text.find("19.1% larger"), std::string::npos);
}

TEST(MediansCsv, DetectsAndRejects) {
  EXPECT_TRUE(looks_like_medians_csv(BUOYANCY_DATA_DIR "/table3_medians.csv"));
  EXPECT_FALSE(looks_like_medians_csv(BUOYANCY_DATA_DIR "/replay_example.jsonl"));
  const std::string path = testing::TempDir() + "bad_medians.csv";
  std::ofstream(path) << "workload,low_p95_ms,high_p95_ms,low_buoyancy,high_buoyancy\n"
                      << "a,1,2,0.3\n";
  try {
    read_medians_csv(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::ofstream(path) << "workload,low_p95_ms,high_p95_ms,low_buoyancy,high_buoyancy\n"
                      << "a,1,2x,0.3,0.2\n";
  EXPECT_THROW(read_medians_csv(path), ParseError);
}

TEST(SegmentMediansTest, FromLabelledReplay) {
  Engine engine({}, xeon_4309y_topology(), {{"w", SloSpec{.slo_value = 10.0}}});
  std::vector<std::vector<ReplayRecord>> windows;
  const std::vector<std::pair<const char*, double>> plan{
      {"low", 4}, {"low", 5}, {"low", 6}, {"high", 8}, {"high", 9}, {"high", 7}};
  for (std::size_t i = 0; i < plan.size(); ++i) {
    windows.push_back({ReplayRecord{sample("w", static_cast<int>(i), plan[i].second),
                                    plan[i].first, i + 1}});
  }
  const auto m = segment_medians(windows, engine);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].low_p95_ms, 5);
  EXPECT_EQ(m[0].high_p95_ms, 8);
  // cpu 0.2, llc and mbw 0.
  const double headroom = 0.7 * (1 - 0.2) + 0.3 * (1 - 0.2 / 3);
  EXPECT_NEAR(m[0].low_buoyancy, 0.5 * headroom, 1e-12);
  EXPECT_NEAR(m[0].high_buoyancy, 0.2 * headroom, 1e-12);
}

TEST(SegmentMediansTest, NeedsBothSegments) {
  Engine engine({}, xeon_4309y_topology(), {{"w", SloSpec{.slo_value = 10.0}}});
  const std::vector<std::vector<ReplayRecord>> windows{
      {ReplayRecord{sample("w", 0, 4), "low", 1}}, {ReplayRecord{sample("w", 1, 5), "low", 2}}};
  EXPECT_EQ(code_of([&] { segment_medians(windows, engine); }), ErrorCode::InsufficientData);
}

TEST(SegmentMediansTest, ExampleReplayShowsLostHeadroom) {
  Engine engine({}, xeon_4309y_topology(), {{"web", SloSpec{.slo_value = 12.0}}});
  const auto m = segment_medians(read_replay_file(BUOYANCY_DATA_DIR "/replay_example.jsonl"), engine);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].workload_id, "web");
  EXPECT_GT(m[0].high_p95_ms, m[0].low_p95_ms);
  EXPECT_LT(m[0].high_buoyancy, m[0].low_buoyancy);
}

TEST(Surface, AxisAndExamples) {
  const auto axis = surface_axis(0.05);
  ASSERT_EQ(axis.size(), 21u);
  EXPECT_EQ(axis[10], 0.5);
  EXPECT_EQ(axis[16], 0.8);
  EXPECT_EQ(axis.back(), 1);
  EXPECT_EQ(surface_axis(0.3).size(), 4u);
  EXPECT_EQ(code_of([] { surface_axis(0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { surface_axis(0.6); }), ErrorCode::InvalidArgument);

  const auto pts = buoyancy_surface(0.7, 0.05);
  EXPECT_EQ(pts.size(), 3u * 21 * 21);
  auto at = [&](std::optional<double> second, double p, double r) {
    for (const auto& pt : pts) {
      if (pt.second_score == second && pt.perf == p && pt.score == r) return pt;
    }
    throw std::runtime_error("grid point missing");
  };
  EXPECT_EQ(at(std::nullopt, 1, 0).buoyancy, 1);
  const SurfacePoint edge = at(std::nullopt, 0.5, 0.8);
  EXPECT_NEAR(edge.buoyancy, 0.1, 1e-15);
  EXPECT_TRUE(edge.approaching_violation);
  for (double p : axis) EXPECT_EQ(at(std::nullopt, p, 1).buoyancy + 0.0, 0.0);
  // Two-score panel: r = 0.3 next to a 0.8 second score.
  EXPECT_NEAR(at(0.8, 1, 0.3).buoyancy, 0.7 * 0.2 + 0.3 * (1 - 0.55), 1e-12);
}

TEST(Surface, SingleScoreCollapse) {
  for (const auto& pt : buoyancy_surface(0.7, 0.05, 0.1, {std::nullopt})) {
    EXPECT_EQ(pt.buoyancy, pt.perf * (1 - pt.score));
    EXPECT_EQ(pt.approaching_violation, pt.perf * (1 - pt.score) <= 0.1);
  }
}

TEST(Surface, CsvShape) {
  const std::string csv = format_surface_csv(buoyancy_surface(0.7, 0.5, 0.1, {std::nullopt, 0.3}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "second_score,perf_score,resource_score,buoyancy,approaching_violation");
  EXPECT_NE(csv.find("\nnone,0.5,0.5,0.25,0\n"), std::string::npos);
  EXPECT_NE(csv.find("\n0.3,1,0,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 9);
}
