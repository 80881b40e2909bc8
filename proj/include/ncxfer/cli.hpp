#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncxfer/config.hpp"
#include "ncxfer/model.hpp"
#include "ncxfer/plot.hpp"
#include "ncxfer/report.hpp"
#include "ncxfer/selftest.hpp"
#include "ncxfer/sweep.hpp"
#include "ncxfer/transport.hpp"

namespace ncxfer {

namespace cli_detail {

// Validation failures that should map to the usage exit code.
class UsageError : public Error {
  using Error::Error;
};

inline std::vector<SchemeId> parse_scheme_list(const std::string& text) {
  std::vector<SchemeId> out;
  if (text == "all") return {kAllSchemes.begin(), kAllSchemes.end()};
  for (auto name : detail::split(text, ',')) {
    auto s = parse_scheme(detail::trim(name));
    if (!s) throw UsageError("unknown scheme '" + std::string(name) + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw UsageError("empty scheme list");
  return out;
}

inline std::size_t parse_size(const std::string& text) {
  try {
    return detail::parse_size_value("size", detail::trim(text));
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }
}

inline SizeSweep parse_sweep(const std::string& text) {
  auto parts = detail::split(text, ':');
  if (parts.size() != 3) throw UsageError("--sizes expects MIN:MAX:STEP, got '" + text + "'");
  SizeSweep s;
  s.min_bytes = parse_size(std::string(parts[0]));
  s.max_bytes = parse_size(std::string(parts[1]));
  try {
    s.step = detail::parse_double_value("step", parts[2]);
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }
  return s;
}

struct Formats {
  bool csv = false;
  bool json = false;
  bool plots = false;
};

inline Formats parse_formats(const std::string& text) {
  Formats f;
  for (auto name : detail::split(text, ',')) {
    name = detail::trim(name);
    if (name == "csv") f.csv = true;
    else if (name == "json") f.json = true;
    else if (name == "plots" || name == "svg") f.plots = true;
    else throw UsageError("unknown format '" + std::string(name) + "'");
  }
  return f;
}

inline constexpr const char* kModelFields[] = {
    "alpha_s", "beta_s_per_byte", "gamma_s_per_byte", "handshake_s", "per_segment_s", "per_call_s", "bookkeeping_s",
};

// Raw option values; applied in a fixed order once parsing succeeded so a
// config file never overrides an explicit flag.
struct Options {
  std::string schemes = "all";
  std::string sizes;
  std::string size;
  std::string layout = "vector";
  std::size_t blocklen = 1;
  std::size_t stride = 2;
  std::size_t elem_bytes = kDefaultElemBytes;
  std::string backend = "inproc";
  std::string eager_limit;
  std::string flush_bytes;
  std::size_t reps = 20;
  std::size_t warmup = 1;
  bool nic_offload = false;
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::string> model_values = std::vector<std::string>(std::size(kModelFields));
  std::string out = "ncxfer";
  std::string format = "csv";
  std::uint16_t port = 0;
  std::string host = "127.0.0.1";

  std::vector<std::pair<std::string, CLI::Option*>> model_opts;
  CLI::Option* blocklen_opt = nullptr;
  CLI::Option* stride_opt = nullptr;
  CLI::Option* flush_opt = nullptr;
  CLI::Option* nic_opt = nullptr;
  CLI::Option* sizes_opt = nullptr;
  CLI::Option* size_opt = nullptr;
};

inline void add_transport_options(CLI::App& sub, Options& o) {
  sub.add_option("--config", o.config_path, "key=value file of transport and model settings");
  sub.add_option("--eager-limit", o.eager_limit, "eager/rendezvous switch point in bytes");
  sub.add_option("--set", o.sets, "any config field, as KEY=VALUE (repeatable)");
  o.nic_opt = sub.add_flag("--nic-offload", o.nic_offload, "let the network overlap with gathering");
  for (std::size_t i = 0; i < std::size(kModelFields); ++i) {
    auto* opt = sub.add_option(std::string("--model-") + kModelFields[i], o.model_values[i],
                               std::string("cost model parameter ") + kModelFields[i]);
    o.model_opts.emplace_back(kModelFields[i], opt);
  }
}

inline void add_layout_options(CLI::App& sub, Options& o) {
  sub.add_option("--layout", o.layout, "contig, vector, vector:BLOCKLEN:STRIDE or a full layout")
      ->capture_default_str();
  o.blocklen_opt = sub.add_option("--blocklen", o.blocklen, "elements per vector block");
  o.stride_opt = sub.add_option("--stride", o.stride, "elements between vector block starts");
  sub.add_option("--elem-bytes", o.elem_bytes, "element size in bytes")->capture_default_str();
}

inline void add_run_options(CLI::App& sub, Options& o) {
  sub.add_option("--schemes,--scheme", o.schemes, "comma-separated schemes, or all")->capture_default_str();
  o.sizes_opt = sub.add_option("--sizes", o.sizes, "MIN:MAX:STEP message size sweep in bytes");
  o.size_opt = sub.add_option("--size", o.size, "single message size in bytes");
  add_layout_options(sub, o);
  sub.add_option("--backend", o.backend, "inproc, modeled or tcp")->capture_default_str();
  o.flush_opt = sub.add_option("--flush-bytes", o.flush_bytes, "cache flush array size, 0 disables");
  sub.add_option("--reps", o.reps, "timed ping-pongs per point")->capture_default_str();
  sub.add_option("--warmup", o.warmup, "untimed ping-pongs per point")->capture_default_str();
  sub.add_option("--out", o.out, "output prefix, or - for standard output")->capture_default_str();
  sub.add_option("--format", o.format, "any of csv,json,plots")->capture_default_str();
  add_transport_options(sub, o);
}

inline TransportConfig build_transport(const Options& o) {
  TransportConfig cfg;
  try {
    if (!o.config_path.empty()) cfg = load_config_file(o.config_path);
    for (const auto& kv : o.sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
      if (!set_config_field(cfg, detail::trim(std::string_view(kv).substr(0, eq)),
                            detail::trim(std::string_view(kv).substr(eq + 1))))
        throw UsageError("unknown config field in '" + kv + "'");
    }
    if (!o.eager_limit.empty()) set_config_field(cfg, "eager_limit_bytes", o.eager_limit);
    for (std::size_t i = 0; i < o.model_opts.size(); ++i)
      if (o.model_opts[i].second->count() > 0) set_config_field(cfg, o.model_opts[i].first, o.model_values[i]);
    if (o.nic_opt->count() > 0) cfg.model.nic_offload = o.nic_offload;
    cfg.validate();
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline LayoutTemplate build_layout(const Options& o) {
  if (o.elem_bytes == 0) throw UsageError("--elem-bytes must be positive");
  LayoutTemplate t;
  try {
    t = parse_layout_template(o.layout, o.elem_bytes);
    if (t.kind == LayoutTemplate::Kind::Vector) {
      if (o.blocklen_opt->count() > 0) t.blocklen = o.blocklen;
      if (o.stride_opt->count() > 0) t.stride = o.stride;
      (void)Layout::vector(1, t.blocklen, t.stride, o.elem_bytes);
    }
  } catch (const InvalidLayout& e) {
    throw UsageError(e.what());
  }
  return t;
}

inline RunSpec build_spec(const Options& o) {
  RunSpec spec;
  spec.schemes = parse_scheme_list(o.schemes);
  if (o.sizes_opt->count() > 0 && o.size_opt->count() > 0) throw UsageError("give either --sizes or --size");
  if (o.sizes_opt->count() > 0) spec.sizes = parse_sweep(o.sizes);
  if (o.size_opt->count() > 0) {
    const std::size_t n = parse_size(o.size);
    spec.sizes = {n, n, 2.0};
  }
  spec.layout = build_layout(o);
  auto backend = parse_backend(o.backend);
  if (!backend) throw UsageError("unknown backend '" + o.backend + "'");
  spec.backend = *backend;
  spec.transport = build_transport(o);
  spec.measure.reps = o.reps;
  spec.measure.warmup_reps = o.warmup;
  spec.measure.clock = clock_for(spec.backend);
  // Modeled time never sees the caches, so flushing is off there unless asked for.
  if (o.flush_opt->count() > 0) spec.measure.flush_bytes = parse_size(o.flush_bytes);
  else if (spec.backend == Backend::Modeled) spec.measure.flush_bytes = 0;
  try {
    spec.normalize();
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }
  return spec;
}

inline void emit_outputs(const std::vector<MeasurementRecord>& records, const Options& o, std::ostream& out) {
  const Formats f = parse_formats(o.format);
  const auto rows = build_table(records);
  const bool to_stdout = o.out == "-";
  if (f.csv) {
    if (to_stdout) emit_csv(rows, out);
    else emit_csv(rows, o.out + ".csv"), out << "wrote " << o.out << ".csv\n";
  }
  if (f.json) {
    if (to_stdout) emit_json(rows, out);
    else emit_json(rows, o.out + ".json"), out << "wrote " << o.out << ".json\n";
  }
  if (f.plots) {
    const std::string prefix = to_stdout ? std::string("ncxfer") : o.out;
    for (const auto& p : emit_plots(rows, prefix)) out << "wrote " << p << '\n';
  }
}

inline int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  RunSpec spec = build_spec(o);
  (void)parse_formats(o.format);
  Pair pair = connect(spec.backend, spec.transport, TcpOptions{o.port});
  auto records = run_sweep(spec, pair, [&](const MeasurementRecord& r) {
    err << cli_name(r.scheme) << ' ' << r.msg_bytes << " bytes: " << format_double(r.measurement.mean_s) << " s\n";
  });
  emit_outputs(records, o, out);
  return 0;
}

inline int cmd_predict(const Options& o, std::ostream& out) {
  RunSpec spec = build_spec(o);
  const std::size_t eb = spec.layout.elem_bytes;
  out << std::left << std::setw(12) << "scheme" << std::right << std::setw(14) << "msg_bytes" << std::setw(16)
      << "time_s" << std::setw(10) << "slowdown" << '\n';
  for (std::size_t n : sweep_sizes(spec)) {
    for (SchemeId s : spec.schemes) {
      const Prediction p = predict(s, n, spec.transport, eb);
      std::ostringstream t;
      t << std::scientific << std::setprecision(6) << p.time_s;
      std::ostringstream sd;
      sd << std::fixed << std::setprecision(2) << p.slowdown_vs_contiguous;
      out << std::left << std::setw(12) << cli_name(s) << std::right << std::setw(14) << n << std::setw(16)
          << t.str() << std::setw(10) << sd.str() << '\n';
    }
  }
  return 0;
}

inline std::uint64_t seed_from_env() {
  const char* v = std::getenv("NCXFER_SEED");
  if (v == nullptr || *v == '\0') return 1;
  std::uint64_t seed = 0;
  std::string_view s(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("NCXFER_SEED must be an unsigned integer");
  return seed;
}

inline int cmd_selftest(const Options& o, std::optional<std::uint64_t> seed, std::size_t layouts,
                        std::ostream& out, std::ostream& err) {
  SelftestOptions opt;
  opt.seed = seed ? *seed : seed_from_env();
  opt.layouts = layouts;
  opt.transport = build_transport(o);
  const auto report = run_selftest(opt);
  for (const auto& f : report.failures) err << "FAIL " << f << '\n';
  out << "selftest seed " << opt.seed << ": " << report.checks - report.failures.size() << '/' << report.checks
      << " checks passed\n";
  return report.ok() ? 0 : 2;
}

inline int cmd_serve(const Options& o, std::ostream& out) {
  RunSpec spec = build_spec(o);
  TcpListener listener(o.port);
  out << "listening on port " << listener.port() << std::endl;
  TcpEndpoint ep(listener.accept(), spec.transport);
  run_sweep_receiver(spec, ep);
  ep.close();
  return 0;
}

inline int cmd_connect(const Options& o, std::ostream& out, std::ostream& err) {
  RunSpec spec = build_spec(o);
  if (o.port == 0) throw UsageError("connect needs --port");
  auto ep = TcpEndpoint::dial(o.host, o.port, spec.transport);
  auto records = run_sweep_sender(spec, *ep, nullptr, [&](const MeasurementRecord& r) {
    err << cli_name(r.scheme) << ' ' << r.msg_bytes << " bytes: " << format_double(r.measurement.mean_s) << " s\n";
  });
  ep->close();
  emit_outputs(records, o, out);
  return 0;
}

}  // namespace cli_detail

// Entry point of the ncxfer tool. Exit status: 0 success, 1 usage or
// validation error, 2 failure while running.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Benchmark and model non-contiguous message transfer schemes", "ncxfer"};
  app.require_subcommand(1);

  Options run_o, predict_o, self_o, serve_o, connect_o;
  auto* run = app.add_subcommand("run", "measure a sweep and write reports");
  add_run_options(*run, run_o);
  run->add_option("--port", run_o.port, "loopback port for the tcp backend (0 picks one)");

  auto* pred = app.add_subcommand("predict", "print model predictions without running transfers");
  add_run_options(*pred, predict_o);

  auto* self = app.add_subcommand("selftest", "check delivery of random layouts through every scheme");
  std::optional<std::uint64_t> seed;
  std::size_t layouts = 200;
  self->add_option("--seed", seed, "layout randomizer seed (default NCXFER_SEED, else 1)");
  self->add_option("--layouts", layouts, "number of random layouts")->capture_default_str();
  add_transport_options(*self, self_o);

  auto* serve = app.add_subcommand("serve", "receiving half of a two-process tcp sweep");
  add_run_options(*serve, serve_o);
  serve->add_option("--port", serve_o.port, "port to listen on (0 picks one)");

  auto* conn = app.add_subcommand("connect", "sending half of a two-process tcp sweep; writes reports");
  add_run_options(*conn, connect_o);
  conn->add_option("--port", connect_o.port, "port of the serving process")->required();
  conn->add_option("--host", connect_o.host, "host of the serving process")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_o, out, err);
    if (*pred) return cmd_predict(predict_o, out);
    if (*self) return cmd_selftest(self_o, seed, layouts, out, err);
    if (*serve) return cmd_serve(serve_o, out);
    if (*conn) return cmd_connect(connect_o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidLayout& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace ncxfer
