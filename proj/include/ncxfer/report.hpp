#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ncxfer/errors.hpp"
#include "ncxfer/measure.hpp"
#include "ncxfer/scheme_id.hpp"

namespace ncxfer {

// One measured sweep point, as produced by the harness.
struct MeasurementRecord {
  SchemeId scheme = SchemeId::Contiguous;
  std::size_t msg_bytes = 0;
  std::string backend;
  Measurement measurement;
};

struct ResultRow {
  SchemeId scheme = SchemeId::Contiguous;
  std::size_t msg_bytes = 0;
  double mean_time_s = 0.0;
  double filtered_mean_s = 0.0;
  double min_time_s = 0.0;
  double stddev_s = 0.0;
  double bandwidth_Bps = 0.0;
  double slowdown = 1.0;
  std::string backend;
  std::size_t discarded_count = 0;

  bool operator==(const ResultRow&) const = default;
};

inline constexpr std::string_view kCsvHeader =
    "scheme,msg_bytes,mean_time_s,filtered_mean_s,min_time_s,stddev_s,bandwidth_Bps,slowdown,backend,discarded";

// Slowdowns are taken against the contiguous measurement of the same size
// and backend.
inline std::vector<ResultRow> build_table(const std::vector<MeasurementRecord>& records) {
  std::map<std::pair<std::string, std::size_t>, double> baseline;
  for (const auto& r : records)
    if (r.scheme == SchemeId::Contiguous) baseline[{r.backend, r.msg_bytes}] = r.measurement.mean_s;

  std::vector<ResultRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    auto it = baseline.find({r.backend, r.msg_bytes});
    if (it == baseline.end())
      throw MissingBaseline("no contiguous measurement for " + std::to_string(r.msg_bytes) + " bytes on " +
                            r.backend);
    const Measurement& m = r.measurement;
    ResultRow row;
    row.scheme = r.scheme;
    row.msg_bytes = r.msg_bytes;
    row.mean_time_s = m.mean_s;
    row.filtered_mean_s = m.filtered_mean_s;
    row.min_time_s = m.min_s;
    row.stddev_s = m.stddev_s;
    row.bandwidth_Bps = m.mean_s > 0.0 ? static_cast<double>(r.msg_bytes) / m.mean_s : 0.0;
    row.slowdown = r.scheme == SchemeId::Contiguous ? 1.0 : m.mean_s / it->second;
    row.backend = r.backend;
    row.discarded_count = m.discarded_count;
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tuple(static_cast<int>(a.scheme), a.msg_bytes, a.backend) <
           std::tuple(static_cast<int>(b.scheme), b.msg_bytes, b.backend);
  });
  return rows;
}

// Shortest text that is still exact to 17 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

inline void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  if (rows.empty()) throw EmptyInput("no rows to emit");
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << cli_name(r.scheme) << ',' << r.msg_bytes << ',' << format_double(r.mean_time_s) << ','
        << format_double(r.filtered_mean_s) << ',' << format_double(r.min_time_s) << ','
        << format_double(r.stddev_s) << ',' << format_double(r.bandwidth_Bps) << ','
        << format_double(r.slowdown) << ',' << r.backend << ',' << r.discarded_count << '\n';
  }
  if (!out) throw IoFailure("CSV write failed");
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw EmptyInput("no rows to emit");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open " + path);
  emit_csv(rows, f);
}

namespace detail {

inline double parse_csv_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw IoFailure("bad number in CSV: " + std::string(s));
  return v;
}

inline std::size_t parse_csv_size(std::string_view s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw IoFailure("bad integer in CSV: " + std::string(s));
  return v;
}

}  // namespace detail

inline std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoFailure("missing or unexpected CSV header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    while (true) {
      auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 10) throw IoFailure("CSV row has " + std::to_string(f.size()) + " fields");
    auto scheme = parse_scheme(f[0]);
    if (!scheme) throw IoFailure("unknown scheme in CSV: " + std::string(f[0]));
    ResultRow r;
    r.scheme = *scheme;
    r.msg_bytes = detail::parse_csv_size(f[1]);
    r.mean_time_s = detail::parse_csv_double(f[2]);
    r.filtered_mean_s = detail::parse_csv_double(f[3]);
    r.min_time_s = detail::parse_csv_double(f[4]);
    r.stddev_s = detail::parse_csv_double(f[5]);
    r.bandwidth_Bps = detail::parse_csv_double(f[6]);
    r.slowdown = detail::parse_csv_double(f[7]);
    r.backend = std::string(f[8]);
    r.discarded_count = detail::parse_csv_size(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json to_json(const std::vector<ResultRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({
        {"scheme", std::string(cli_name(r.scheme))},
        {"msg_bytes", r.msg_bytes},
        {"mean_time_s", r.mean_time_s},
        {"filtered_mean_s", r.filtered_mean_s},
        {"min_time_s", r.min_time_s},
        {"stddev_s", r.stddev_s},
        {"bandwidth_Bps", r.bandwidth_Bps},
        {"slowdown", r.slowdown},
        {"backend", r.backend},
        {"discarded", r.discarded_count},
    });
  }
  return arr;
}

inline void emit_json(const std::vector<ResultRow>& rows, std::ostream& out) {
  if (rows.empty()) throw EmptyInput("no rows to emit");
  out << to_json(rows).dump(2) << '\n';
  if (!out) throw IoFailure("JSON write failed");
}

inline void emit_json(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw EmptyInput("no rows to emit");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open " + path);
  emit_json(rows, f);
}

}  // namespace ncxfer
