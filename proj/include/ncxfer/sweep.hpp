#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ncxfer/errors.hpp"
#include "ncxfer/layout.hpp"
#include "ncxfer/measure.hpp"
#include "ncxfer/report.hpp"
#include "ncxfer/scheme_id.hpp"
#include "ncxfer/transport.hpp"

namespace ncxfer {

struct SizeSweep {
  std::size_t min_bytes = 1024;
  std::size_t max_bytes = std::size_t{128} << 20;
  double step = 2.0;
};

// How a message size turns into a layout. `fixed` pins one layout and
// replaces the size sweep by its payload size.
struct LayoutTemplate {
  enum class Kind { Contiguous, Vector, Fixed };
  Kind kind = Kind::Vector;
  std::size_t blocklen = 1;  // every other element by default
  std::size_t stride = 2;
  std::size_t elem_bytes = kDefaultElemBytes;
  std::optional<Layout> fixed;

  std::size_t granule_bytes() const {
    return kind == Kind::Vector ? blocklen * elem_bytes : elem_bytes;
  }

  Layout for_size(std::size_t msg_bytes) const {
    switch (kind) {
      case Kind::Contiguous: return Layout::contiguous(msg_bytes / elem_bytes, elem_bytes);
      case Kind::Vector: return Layout::vector(msg_bytes / granule_bytes(), blocklen, stride, elem_bytes);
      case Kind::Fixed: return *fixed;
    }
    return *fixed;
  }
};

// Parses `contig`, `vector:BLOCKLEN:STRIDE`, or any full layout form
// (`contig:COUNT`, `vector:COUNT:BLOCKLEN:STRIDE`, `indexed:...`).
inline LayoutTemplate parse_layout_template(std::string_view text, std::size_t elem_bytes) {
  LayoutTemplate t;
  t.elem_bytes = elem_bytes;
  if (text == "contig" || text == "contiguous") {
    t.kind = LayoutTemplate::Kind::Contiguous;
    return t;
  }
  if (text == "vector") return t;
  if (text.starts_with("vector:")) {
    auto parts = detail::split(text.substr(7), ':');
    if (parts.size() == 2) {
      t.blocklen = detail::parse_count(parts[0], "blocklen");
      t.stride = detail::parse_count(parts[1], "stride");
      // Validate once through the real constructor.
      (void)Layout::vector(1, t.blocklen, t.stride, elem_bytes);
      return t;
    }
  }
  t.kind = LayoutTemplate::Kind::Fixed;
  t.fixed = parse_layout(text, elem_bytes);
  return t;
}

struct RunSpec {
  std::vector<SchemeId> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  SizeSweep sizes;
  LayoutTemplate layout;
  Backend backend = Backend::InProc;
  TransportConfig transport;
  MeasureConfig measure;

  // Every output carries a slowdown column, so the contiguous baseline is
  // always measured; schemes run in canonical order.
  void normalize() {
    if (sizes.min_bytes > sizes.max_bytes) throw InvalidConfig("size sweep min exceeds max");
    if (!(sizes.step > 1.0)) throw InvalidConfig("size sweep step must exceed 1");
    if (layout.elem_bytes == 0) throw InvalidConfig("elem_bytes must be positive");
    transport.validate();
    measure.validate();
    if (std::find(schemes.begin(), schemes.end(), SchemeId::Contiguous) == schemes.end())
      schemes.push_back(SchemeId::Contiguous);
    std::sort(schemes.begin(), schemes.end());
    schemes.erase(std::unique(schemes.begin(), schemes.end()), schemes.end());
  }
};

// Geometric sweep, each size rounded down to a whole number of layout
// granules (at least one); duplicates after rounding are dropped.
inline std::vector<std::size_t> sweep_sizes(const RunSpec& spec) {
  if (spec.layout.kind == LayoutTemplate::Kind::Fixed) return {spec.layout.fixed->payload_bytes()};
  const std::size_t unit = spec.layout.granule_bytes();
  std::vector<std::size_t> out;
  for (double s = static_cast<double>(spec.sizes.min_bytes); s <= static_cast<double>(spec.sizes.max_bytes) * (1 + 1e-12);
       s *= spec.sizes.step) {
    std::size_t n = static_cast<std::size_t>(std::llround(s));
    n = std::max(unit, n / unit * unit);
    if (out.empty() || out.back() != n) out.push_back(n);
  }
  return out;
}

using ProgressFn = std::function<void(const MeasurementRecord&)>;

inline ClockKind clock_for(Backend b) { return b == Backend::Modeled ? ClockKind::Virtual : ClockKind::Wall; }

// Runs the whole sweep over an in-process pair.
inline std::vector<MeasurementRecord> run_sweep(const RunSpec& spec, Pair& pair, const ProgressFn& progress = {}) {
  PingPongBench bench(pair, spec.measure);
  std::vector<MeasurementRecord> records;
  for (std::size_t bytes : sweep_sizes(spec)) {
    const Layout l = spec.layout.for_size(bytes);
    for (SchemeId s : spec.schemes) {
      MeasurementRecord rec{s, l.payload_bytes(), std::string(backend_name(pair.backend)), bench.run(s, l)};
      if (progress) progress(rec);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// Halves of the sweep for two-process runs; both sides must use the same spec.
inline std::vector<MeasurementRecord> run_sweep_sender(const RunSpec& spec, Endpoint& ep, VirtualClock* clock,
                                                       const ProgressFn& progress = {}) {
  CacheFlusher flusher(spec.measure.flush_bytes);
  std::vector<MeasurementRecord> records;
  for (std::size_t bytes : sweep_sizes(spec)) {
    const Layout l = spec.layout.for_size(bytes);
    for (SchemeId s : spec.schemes) {
      MeasurementRecord rec{s, l.payload_bytes(), std::string(backend_name(ep.backend())),
                            measure_sender(s, l, ep, spec.measure, flusher, clock)};
      if (progress) progress(rec);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

inline void run_sweep_receiver(const RunSpec& spec, Endpoint& ep) {
  CacheFlusher flusher(spec.measure.flush_bytes);
  for (std::size_t bytes : sweep_sizes(spec)) {
    const Layout l = spec.layout.for_size(bytes);
    for (SchemeId s : spec.schemes) measure_receiver(s, l, ep, spec.measure, flusher);
  }
}

}  // namespace ncxfer
