#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>

#include "ncxfer/errors.hpp"

namespace ncxfer {

// Cost parameters of the analytic model and of the modeled backend.
// Defaults describe a 10 GB/s memory system and network with microsecond
// latencies; they are illustrative, not calibrated to any machine.
struct ModelParams {
  double alpha_s = 3e-6;             // per-message latency
  double beta_s_per_byte = 1e-10;    // memory read/write cost
  double gamma_s_per_byte = 1e-10;   // network transmission cost
  double handshake_s = 2e-6;         // rendezvous round trip
  double per_segment_s = 1e-7;       // per internal segment of a rendezvous transfer
  double per_call_s = 1e-8;          // per element-granular pack call
  double bookkeeping_s = 2.5e-4;     // per internal-buffer chunk of a typed send above threshold
  bool nic_offload = false;

  void validate() const {
    for (double v : {alpha_s, beta_s_per_byte, gamma_s_per_byte, handshake_s, per_segment_s,
                     per_call_s, bookkeeping_s})
      if (!(v >= 0.0)) throw InvalidConfig("model costs must be non-negative");
  }
};

struct TransportConfig {
  std::size_t eager_limit_bytes = 65536;
  std::size_t internal_buffer_bytes = std::size_t{4} << 20;
  std::size_t segment_bytes = std::size_t{1} << 20;
  std::size_t large_message_threshold_bytes = std::size_t{32} << 20;
  ModelParams model;

  void validate() const {
    if (internal_buffer_bytes == 0) throw InvalidConfig("internal_buffer_bytes must be positive");
    if (segment_bytes == 0) throw InvalidConfig("segment_bytes must be positive");
    if (large_message_threshold_bytes == 0)
      throw InvalidConfig("large_message_threshold_bytes must be positive");
    if (segment_bytes > internal_buffer_bytes)
      throw InvalidConfig("segment_bytes must not exceed internal_buffer_bytes");
    if (eager_limit_bytes > internal_buffer_bytes)
      throw InvalidConfig("eager_limit_bytes must not exceed internal_buffer_bytes");
    model.validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::size_t parse_size_value(std::string_view key, std::string_view v) {
  // Accept plain integers and exact scientific forms like 64e3.
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec == std::errc() && p == v.data() + v.size()) return n;
  double d = 0;
  auto [q, ec2] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec2 != std::errc() || q != v.data() + v.size() || d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
    throw InvalidConfig("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  return static_cast<std::size_t>(d);
}

inline double parse_double_value(std::string_view key, std::string_view v) {
  double d = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw InvalidConfig("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  return d;
}

inline bool parse_bool_value(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidConfig("bad boolean for " + std::string(key) + ": '" + std::string(v) + "'");
}

}  // namespace detail

// Sets one field by its name. Model fields accept both `alpha_s` and
// `model.alpha_s`. Returns false for unknown keys.
inline bool set_config_field(TransportConfig& cfg, std::string_view key, std::string_view value) {
  using namespace detail;
  if (key.starts_with("model.")) key.remove_prefix(6);
  ModelParams& m = cfg.model;
  if (key == "eager_limit_bytes") cfg.eager_limit_bytes = parse_size_value(key, value);
  else if (key == "internal_buffer_bytes") cfg.internal_buffer_bytes = parse_size_value(key, value);
  else if (key == "segment_bytes") cfg.segment_bytes = parse_size_value(key, value);
  else if (key == "large_message_threshold_bytes") cfg.large_message_threshold_bytes = parse_size_value(key, value);
  else if (key == "alpha_s") m.alpha_s = parse_double_value(key, value);
  else if (key == "beta_s_per_byte") m.beta_s_per_byte = parse_double_value(key, value);
  else if (key == "gamma_s_per_byte") m.gamma_s_per_byte = parse_double_value(key, value);
  else if (key == "handshake_s") m.handshake_s = parse_double_value(key, value);
  else if (key == "per_segment_s") m.per_segment_s = parse_double_value(key, value);
  else if (key == "per_call_s") m.per_call_s = parse_double_value(key, value);
  else if (key == "bookkeeping_s") m.bookkeeping_s = parse_double_value(key, value);
  else if (key == "nic_offload") m.nic_offload = parse_bool_value(key, value);
  else return false;
  return true;
}

// Reads `key = value` lines; `#` starts a comment. Unknown keys are errors.
inline void load_config(std::istream& in, TransportConfig& cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw InvalidConfig("config line " + std::to_string(lineno) + ": expected key=value");
    auto key = detail::trim(s.substr(0, eq));
    auto value = detail::trim(s.substr(eq + 1));
    if (!set_config_field(cfg, key, value))
      throw InvalidConfig("config line " + std::to_string(lineno) + ": unknown key '" + std::string(key) + "'");
  }
  cfg.validate();
}

inline TransportConfig load_config_file(const std::string& path, TransportConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config file " + path);
  load_config(in, base);
  return base;
}

}  // namespace ncxfer
