#include <gtest/gtest.h>

#include <numeric>

#include "ncxfer/measure.hpp"

using namespace ncxfer;

TEST(FilterOutliers, DropsTheSingleHighSample) {
  const std::vector<double> xs{1, 1, 1, 10};
  auto r = filter_outliers(xs);
  EXPECT_EQ(r.discarded_count, 1u);
  EXPECT_EQ(r.kept, (std::vector<double>{1, 1, 1}));
}

TEST(FilterOutliers, IdenticalSamplesKeepAll) {
  auto r = filter_outliers(std::vector<double>{10, 10, 10, 10});
  EXPECT_EQ(r.discarded_count, 0u);
  EXPECT_EQ(r.kept.size(), 4u);
}

TEST(FilterOutliers, BoundaryIsKept) {
  auto r = filter_outliers(std::vector<double>{1, 2});
  EXPECT_EQ(r.discarded_count, 0u);
  EXPECT_EQ(r.kept, (std::vector<double>{1, 2}));
}

TEST(FilterOutliers, NeedsTwoSamples) {
  EXPECT_THROW(filter_outliers(std::vector<double>{1}), DegenerateInput);
  EXPECT_THROW(filter_outliers(std::vector<double>{}), DegenerateInput);
}

TEST(Summarize, StatisticsByHand) {
  auto m = summarize({1, 1, 1, 10}, 1e-9);
  EXPECT_DOUBLE_EQ(m.mean_s, 3.25);
  EXPECT_NEAR(m.stddev_s, 3.8971, 1e-4);
  EXPECT_DOUBLE_EQ(m.filtered_mean_s, 1.0);
  EXPECT_EQ(m.discarded_count, 1u);
  EXPECT_EQ(m.min_s, 1.0);
  EXPECT_FALSE(m.clock_too_coarse);
  EXPECT_NEAR(m.mean_s * 4, std::accumulate(m.samples_s.begin(), m.samples_s.end(), 0.0), 1e-12);
}

TEST(Summarize, FlagsCoarseClock) {
  auto m = summarize({2e-9, 3e-9}, 1e-9);
  EXPECT_TRUE(m.clock_too_coarse);
}

TEST(Summarize, IdenticalSamplesHaveNoSpread) {
  const double x = 6.2024000000000001e-06;
  auto m = summarize(std::vector<double>(20, x), 0.0);
  EXPECT_EQ(m.mean_s, x);
  EXPECT_EQ(m.stddev_s, 0.0);
  EXPECT_EQ(m.filtered_mean_s, x);
}

TEST(MeasureConfig, RepsBelowTwoRejected) {
  MeasureConfig mc;
  mc.reps = 1;
  EXPECT_THROW(mc.validate(), InvalidConfig);
}

TEST(CacheFlusher, WritesWholeArray) {
  CacheFlusher none(0);
  EXPECT_EQ(none.flush(), 0u);
  CacheFlusher f(50'000'000);
  EXPECT_EQ(f.flush(), 50'000'000u);
  const auto first = f.array()[0];
  EXPECT_EQ(f.array()[49'999'999], first);
  f.flush();
  EXPECT_NE(f.array()[0], first);
}

TEST(PingPong, TwentyRepsGiveTwentySamples) {
  Pair pair = connect(Backend::InProc, {});
  MeasureConfig mc;
  mc.flush_bytes = 1 << 20;
  auto m = run_pingpong(SchemeId::ManualCopy, Layout::vector(1000, 1, 2), pair, mc);
  EXPECT_EQ(m.samples_s.size(), 20u);
  EXPECT_GT(m.clock_resolution_s, 0.0);
  for (double s : m.samples_s) EXPECT_GE(s, m.clock_resolution_s);
  EXPECT_LT(m.discarded_count, 20u);
}

TEST(PingPong, VirtualClockIsExactlyRepeatable) {
  Pair pair = connect(Backend::Modeled, {});
  MeasureConfig mc;
  mc.flush_bytes = 0;
  mc.clock = ClockKind::Virtual;
  for (SchemeId s : kAllSchemes) {
    auto m = run_pingpong(s, Layout::vector(20'000, 1, 2), pair, mc);
    ASSERT_EQ(m.samples_s.size(), 20u);
    for (double x : m.samples_s) EXPECT_EQ(x, m.samples_s.front()) << cli_name(s);
    EXPECT_EQ(m.stddev_s, 0.0);
    EXPECT_EQ(m.discarded_count, 0u);
    EXPECT_EQ(m.mean_s, m.samples_s.front());
  }
}

TEST(PingPong, VirtualClockNeedsModeledBackend) {
  Pair pair = connect(Backend::InProc, {});
  MeasureConfig mc;
  mc.clock = ClockKind::Virtual;
  mc.flush_bytes = 0;
  EXPECT_THROW(run_pingpong(SchemeId::Contiguous, Layout::contiguous(4), pair, mc), InvalidConfig);
}

TEST(PingPong, WarmupIsNotRecorded) {
  Pair pair = connect(Backend::Modeled, {});
  MeasureConfig mc;
  mc.reps = 3;
  mc.warmup_reps = 4;
  mc.flush_bytes = 0;
  mc.clock = ClockKind::Virtual;
  auto m = run_pingpong(SchemeId::ManualCopy, Layout::contiguous(16), pair, mc);
  EXPECT_EQ(m.samples_s.size(), 3u);
  EXPECT_EQ(pair.b->stats().messages_sent, 7u);  // one pong per rep
}
