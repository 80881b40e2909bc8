#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ncxfer/measure.hpp"
#include "ncxfer/schemes.hpp"
#include "ncxfer/testing/oracle.hpp"
#include "ncxfer/transport.hpp"

namespace ncxfer {

struct SelftestOptions {
  std::uint64_t seed = 1;
  std::size_t layouts = 200;
  std::vector<Backend> backends{Backend::InProc, Backend::Modeled};
  TransportConfig transport;
};

struct SelftestReport {
  std::size_t checks = 0;
  std::vector<std::string> failures;

  bool ok() const noexcept { return failures.empty(); }
};

// Sends random layouts through every scheme on every backend and compares
// the receiver's bytes with the brute-force gather; also checks that
// scatter undoes gather. The layout sequence depends only on the seed.
inline SelftestReport run_selftest(const SelftestOptions& opt) {
  SelftestReport report;
  std::mt19937_64 rng(opt.seed);
  std::vector<Layout> layouts;
  layouts.reserve(opt.layouts);
  for (std::size_t i = 0; i < opt.layouts; ++i) layouts.push_back(oracle::random_layout(rng));

  for (const Layout& l : layouts) {
    AlignedBuffer source(l.extent_bytes());
    fill_pattern(source.span());
    AlignedBuffer restored(l.extent_bytes());
    scatter(l, gather(l, source.span()), restored.span());
    bool same = true;
    for (std::size_t off : oracle::element_offsets(l))
      for (std::size_t b = 0; b < l.elem_bytes(); ++b)
        same = same && restored.data()[off + b] == source.data()[off + b];
    ++report.checks;
    if (!same) report.failures.push_back("round trip failed for " + to_string(l));
  }

  for (Backend backend : opt.backends) {
    Pair pair = connect(backend, opt.transport);
    MeasureConfig mc;
    mc.reps = 2;
    mc.warmup_reps = 0;
    mc.flush_bytes = 0;
    mc.clock = backend == Backend::Modeled ? ClockKind::Virtual : ClockKind::Wall;
    PingPongBench bench(pair, mc);
    for (const Layout& l : layouts) {
      AlignedBuffer source(l.extent_bytes());
      fill_pattern(source.span());
      const auto expected = oracle::oracle_gather(l, source.span());
      for (SchemeId s : kAllSchemes) {
        ReceiverContext got;
        bench.run(s, l, &got);
        ++report.checks;
        const auto bytes = got.received();
        if (bytes.size() != expected.size() || !std::equal(bytes.begin(), bytes.end(), expected.begin()))
          report.failures.push_back(std::string(cli_name(s)) + " on " + std::string(backend_name(backend)) +
                                    " delivered wrong bytes for " + to_string(l));
      }
    }
  }
  return report;
}

}  // namespace ncxfer
