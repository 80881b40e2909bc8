#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ncxfer/measure.hpp"
#include "ncxfer/model.hpp"
#include "ncxfer/plot.hpp"
#include "ncxfer/report.hpp"

using namespace ncxfer;

namespace {

MeasurementRecord record(SchemeId s, std::size_t n, std::vector<double> samples, std::string backend = "inproc") {
  return {s, n, std::move(backend), summarize(std::move(samples), 1e-9)};
}

std::vector<MeasurementRecord> sample_records() {
  return {
      record(SchemeId::ManualCopy, 2048, {3e-6, 3.2e-6, 2.9e-6}),
      record(SchemeId::Contiguous, 2048, {1e-6, 1.1e-6, 0.9e-6}),
      record(SchemeId::Contiguous, 1024, {0.5e-6, 0.5e-6}),
      record(SchemeId::ManualCopy, 1024, {1.5e-6, 1.7e-6}),
      record(SchemeId::PackElement, 1024, {9e-6, 9.5e-6, 30e-6, 9.1e-6}),
  };
}

std::filesystem::path temp_prefix(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ncxfer-test-" + name);
}

}  // namespace

TEST(BuildTable, SlowdownAgainstMatchingContiguous) {
  auto rows = build_table(sample_records());
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    if (r.scheme == SchemeId::Contiguous) {
      EXPECT_EQ(r.slowdown, 1.0);
    }
    EXPECT_GT(r.bandwidth_Bps, 0.0);
    EXPECT_NEAR(r.bandwidth_Bps * r.mean_time_s, static_cast<double>(r.msg_bytes), 1e-9 * r.msg_bytes);
  }
  EXPECT_EQ(rows[0].scheme, SchemeId::Contiguous);
  EXPECT_EQ(rows[0].msg_bytes, 1024u);
  EXPECT_EQ(rows[1].msg_bytes, 2048u);
  EXPECT_EQ(rows[2].scheme, SchemeId::ManualCopy);
  EXPECT_NEAR(rows[2].slowdown, 3.2, 1e-12);
  EXPECT_NEAR(rows[3].slowdown, 9.1 / 3.0, 1e-9);
  EXPECT_EQ(rows[4].scheme, SchemeId::PackElement);
  EXPECT_EQ(rows[4].discarded_count, 1u);
}

TEST(BuildTable, MissingBaseline) {
  std::vector<MeasurementRecord> recs{record(SchemeId::ManualCopy, 64, {1, 2}),
                                      record(SchemeId::BufferedSend, 64, {1, 2})};
  EXPECT_THROW(build_table(recs), MissingBaseline);
  // A baseline from another backend does not count.
  recs.push_back(record(SchemeId::Contiguous, 64, {1, 2}, "tcp"));
  EXPECT_THROW(build_table(recs), MissingBaseline);
}

TEST(BuildTable, ModeledSlowdownMatchesPrediction) {
  TransportConfig cfg;
  Pair pair = connect(Backend::Modeled, cfg);
  MeasureConfig mc;
  mc.flush_bytes = 0;
  mc.reps = 2;
  mc.warmup_reps = 0;
  mc.clock = ClockKind::Virtual;
  const std::size_t n = 64 << 20;
  const Layout l = Layout::vector(n / 8, 1, 2);
  PingPongBench bench(pair, mc);
  std::vector<MeasurementRecord> recs{
      {SchemeId::Contiguous, n, "modeled", bench.run(SchemeId::Contiguous, l)},
      {SchemeId::ManualCopy, n, "modeled", bench.run(SchemeId::ManualCopy, l)},
  };
  auto rows = build_table(recs);
  EXPECT_NEAR(rows[1].slowdown, predict_slowdown(SchemeId::ManualCopy, n, cfg), 1e-9);
}

TEST(Csv, HeaderAndSingleRow) {
  auto rows = build_table({record(SchemeId::Contiguous, 8, {1e-6, 1e-6})});
  std::ostringstream out;
  emit_csv(rows, out);
  EXPECT_EQ(out.str(),
            "scheme,msg_bytes,mean_time_s,filtered_mean_s,min_time_s,stddev_s,bandwidth_Bps,slowdown,backend,"
            "discarded\n"
            "contiguous,8,9.9999999999999995e-07,9.9999999999999995e-07,9.9999999999999995e-07,0,8000000,1,inproc,0\n");
}

TEST(Csv, EmptyRowsRefused) {
  std::ostringstream out;
  EXPECT_THROW(emit_csv({}, out), EmptyInput);
  EXPECT_THROW(emit_json({}, out), EmptyInput);
  EXPECT_THROW(emit_plots({}, temp_prefix("empty").string()), EmptyInput);
}

TEST(Csv, RoundTrip) {
  auto rows = build_table(sample_records());
  std::ostringstream out;
  emit_csv(rows, out);
  std::istringstream in(out.str());
  auto back = read_csv(in);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].scheme, rows[i].scheme);
    EXPECT_EQ(back[i].msg_bytes, rows[i].msg_bytes);
    EXPECT_EQ(back[i].discarded_count, rows[i].discarded_count);
    EXPECT_EQ(back[i].backend, rows[i].backend);
    for (auto [a, b] : {std::pair{back[i].mean_time_s, rows[i].mean_time_s},
                        {back[i].filtered_mean_s, rows[i].filtered_mean_s},
                        {back[i].min_time_s, rows[i].min_time_s},
                        {back[i].stddev_s, rows[i].stddev_s},
                        {back[i].bandwidth_Bps, rows[i].bandwidth_Bps},
                        {back[i].slowdown, rows[i].slowdown}})
      EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(b));
  }
  // 17 significant digits are in fact lossless.
  EXPECT_EQ(back, rows);
}

TEST(Csv, UnwritablePath) {
  auto rows = build_table(sample_records());
  EXPECT_THROW(emit_csv(rows, std::string("/nonexistent-dir/x.csv")), IoFailure);
}

TEST(Json, SameRecords) {
  auto rows = build_table(sample_records());
  auto j = to_json(rows);
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), rows.size());
  EXPECT_EQ(j[0]["scheme"], "contiguous");
  EXPECT_EQ(j[4]["scheme"], "packing-e");
  EXPECT_EQ(j[4]["discarded"], 1);
  EXPECT_EQ(j[2]["slowdown"].get<double>(), rows[2].slowdown);
  for (const char* key : {"msg_bytes", "mean_time_s", "filtered_mean_s", "min_time_s", "stddev_s", "bandwidth_Bps",
                          "backend"})
    EXPECT_TRUE(j[1].contains(key)) << key;
}

TEST(Plots, ThreePanelsWithLegend) {
  auto rows = build_table(sample_records());
  const auto prefix = temp_prefix("plots").string();
  auto paths = emit_plots(rows, prefix);
  ASSERT_EQ(paths, (std::vector<std::string>{prefix + "-time.svg", prefix + "-bw.svg", prefix + "-slowdown.svg"}));
  for (const auto& p : paths) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string svg = ss.str();
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("data-scheme=\"contiguous\""), std::string::npos);
    EXPECT_NE(svg.find("data-scheme=\"copy\""), std::string::npos);
    EXPECT_NE(svg.find(">packing(e)<"), std::string::npos);
    EXPECT_NE(svg.find(">copying<"), std::string::npos);
    std::filesystem::remove(p);
  }
}

TEST(Plots, SlowdownPanelIsLinear) {
  auto rows = build_table(sample_records());
  const std::string slow = render_panel(rows, Panel::Slowdown);
  const std::string time = render_panel(rows, Panel::Time);
  // Log panels label decades.
  EXPECT_NE(time.find(">1e-"), std::string::npos);
  EXPECT_EQ(slow.find(">1e-"), std::string::npos);
  std::size_t series = 0;
  for (auto pos = slow.find("class=\"series\""); pos != std::string::npos; pos = slow.find("class=\"series\"", pos + 1))
    ++series;
  EXPECT_EQ(series, 3u);
}
