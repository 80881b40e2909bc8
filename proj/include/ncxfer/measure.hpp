#pragma once

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <exception>
#include <span>
#include <thread>
#include <vector>

#include "ncxfer/aligned_buffer.hpp"
#include "ncxfer/errors.hpp"
#include "ncxfer/schemes.hpp"
#include "ncxfer/transport.hpp"

namespace ncxfer {

enum class ClockKind { Wall, Virtual };

struct MeasureConfig {
  std::size_t reps = 20;
  std::size_t warmup_reps = 1;
  std::size_t flush_bytes = 50'000'000;  // 0 disables flushing
  ClockKind clock = ClockKind::Wall;

  void validate() const {
    if (reps < 2) throw InvalidConfig("reps must be at least 2");
  }
};

struct Measurement {
  std::vector<double> samples_s;
  double mean_s = 0.0;            // total timed duration / reps
  double stddev_s = 0.0;          // population standard deviation
  double filtered_mean_s = 0.0;   // mean of samples within one stddev
  double min_s = 0.0;
  std::size_t discarded_count = 0;
  double clock_resolution_s = 0.0;
  bool clock_too_coarse = false;  // min sample below 5 clock ticks
};

struct FilterResult {
  std::vector<double> kept;
  std::size_t discarded_count = 0;
};

namespace detail {

struct MeanStd {
  double mean;
  double stddev;
};

inline MeanStd mean_and_population_stddev(std::span<const double> xs) {
  // Shifted by the first sample, so identical samples give exactly that
  // sample back with zero spread.
  const double n = static_cast<double>(xs.size());
  const double k = xs.front();
  double sum = 0.0;
  for (double x : xs) sum += x - k;
  const double shift = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - k - shift) * (x - k - shift);
  return {k + shift, std::sqrt(ss / n)};
}

// Set while a ping-pong is being timed. Instrumentation (allocation
// counters, the cache flusher's assertion) keys off it.
inline std::atomic<bool>& timed_section_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

}  // namespace detail

inline bool in_timed_section() noexcept { return detail::timed_section_flag().load(std::memory_order_relaxed); }

// Single pass: keeps samples within one population standard deviation of
// the mean, boundary included.
inline FilterResult filter_outliers(std::span<const double> samples) {
  if (samples.size() < 2) throw DegenerateInput("outlier filtering needs at least two samples");
  const auto [mean, sd] = detail::mean_and_population_stddev(samples);
  FilterResult r;
  r.kept.reserve(samples.size());
  for (double x : samples) {
    if (std::abs(x - mean) <= sd) r.kept.push_back(x);
    else ++r.discarded_count;
  }
  return r;
}

inline Measurement summarize(std::vector<double> samples, double clock_resolution_s) {
  if (samples.size() < 2) throw DegenerateInput("a measurement needs at least two samples");
  Measurement m;
  const auto [mean, sd] = detail::mean_and_population_stddev(samples);
  m.mean_s = mean;
  m.stddev_s = sd;
  auto filtered = filter_outliers(samples);
  m.discarded_count = filtered.discarded_count;
  m.filtered_mean_s = filtered.kept.empty() ? mean : detail::mean_and_population_stddev(filtered.kept).mean;
  m.min_s = *std::min_element(samples.begin(), samples.end());
  m.clock_resolution_s = clock_resolution_s;
  m.clock_too_coarse = m.min_s < 5.0 * clock_resolution_s;
  m.samples_s = std::move(samples);
  return m;
}

// Smallest observable step of the steady clock.
inline double wall_clock_resolution() {
  using clock = std::chrono::steady_clock;
  double best = 1.0;
  for (int trial = 0; trial < 64; ++trial) {
    auto t0 = clock::now();
    auto t1 = t0;
    while (t1 == t0) t1 = clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

// Rewrites a pre-allocated array to evict the caches between ping-pongs.
class CacheFlusher {
 public:
  explicit CacheFlusher(std::size_t bytes) : array_(bytes) {}

  // Returns the number of bytes written.
  std::size_t flush() {
    assert(!in_timed_section() && "cache flush inside a timed section");
    if (array_.empty()) return 0;
    std::memset(array_.data(), static_cast<int>(++generation_ & 0xff), array_.size());
    // Keep the stores observable.
    sink_ = array_.data()[array_.size() / 2];
    return array_.size();
  }

  std::span<const std::byte> array() const noexcept { return array_.span(); }

 private:
  AlignedBuffer array_;
  unsigned generation_ = 0;
  volatile std::byte sink_{};
};

// Sender half of a measurement. Each repetition: both sides flush, then the
// sender times one ping plus its pong (or closing fence). Warmup repetitions
// run the same way, untimed. With a virtual clock the samples are modeled
// time; otherwise the steady wall clock.
inline Measurement measure_sender(SchemeId scheme, const Layout& l, Endpoint& ep, const MeasureConfig& cfg,
                                  CacheFlusher& flusher, VirtualClock* clock) {
  cfg.validate();
  if (cfg.clock == ClockKind::Virtual && clock == nullptr)
    throw InvalidConfig("virtual clock requested on a backend without one");
  const bool use_virtual = cfg.clock == ClockKind::Virtual;
  const double resolution = use_virtual ? 0.0 : wall_clock_resolution();

  SenderContext ctx = prepare(scheme, l, ep);
  std::vector<double> samples;
  samples.reserve(cfg.reps);
  auto& flag = detail::timed_section_flag();
  for (std::size_t i = 0; i < cfg.warmup_reps + cfg.reps; ++i) {
    ep.barrier();
    flusher.flush();
    ep.barrier();
    double elapsed = 0.0;
    if (use_virtual) {
      clock->mark();
      flag.store(true);
      ping(ctx, ep);
      await_pong(scheme, ep);
      flag.store(false);
      elapsed = clock->lap();
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      flag.store(true);
      ping(ctx, ep);
      await_pong(scheme, ep);
      flag.store(false);
      elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (i >= cfg.warmup_reps) samples.push_back(elapsed);
  }
  return summarize(std::move(samples), resolution);
}

// Receiver half; mirrors measure_sender's repetition structure.
inline void measure_receiver(SchemeId scheme, const Layout& l, Endpoint& ep, const MeasureConfig& cfg,
                             CacheFlusher& flusher, ReceiverContext* out = nullptr) {
  ReceiverContext ctx = prepare_receiver(scheme, l, ep);
  for (std::size_t i = 0; i < cfg.warmup_reps + cfg.reps; ++i) {
    ep.barrier();
    flusher.flush();
    ep.barrier();
    catch_ping(ctx, ep);
    pong(scheme, ep);
  }
  if (out != nullptr) *out = std::move(ctx);
}

// Runs measurements over an in-process pair: the receiver on its own
// thread, the sender (and all timing) on the calling thread. The flush
// arrays are allocated once, here.
class PingPongBench {
 public:
  PingPongBench(Pair& pair, MeasureConfig cfg)
      : pair_(pair), cfg_(cfg), sender_flush_(cfg.flush_bytes), receiver_flush_(cfg.flush_bytes) {
    cfg_.validate();
  }

  const MeasureConfig& config() const noexcept { return cfg_; }

  // `received`, when given, receives the receiver's final context so callers
  // can inspect the delivered bytes.
  Measurement run(SchemeId scheme, const Layout& l, ReceiverContext* received = nullptr) {
    std::exception_ptr receiver_error;
    Measurement m;
    {
      std::jthread receiver([&] {
        try {
          measure_receiver(scheme, l, *pair_.b, cfg_, receiver_flush_, received);
        } catch (...) {
          receiver_error = std::current_exception();
          pair_.b->close();
        }
      });
      try {
        m = measure_sender(scheme, l, *pair_.a, cfg_, sender_flush_, pair_.clock.get());
      } catch (const PeerClosed&) {
        // Usually the echo of a receiver failure; report the original.
        detail::timed_section_flag().store(false);
        pair_.a->close();
        receiver.join();
        if (receiver_error) std::rethrow_exception(receiver_error);
        throw;
      } catch (...) {
        detail::timed_section_flag().store(false);
        pair_.a->close();
        throw;
      }
    }
    if (receiver_error) std::rethrow_exception(receiver_error);
    return m;
  }

 private:
  Pair& pair_;
  MeasureConfig cfg_;
  CacheFlusher sender_flush_;
  CacheFlusher receiver_flush_;
};

inline Measurement run_pingpong(SchemeId scheme, const Layout& l, Pair& pair, const MeasureConfig& cfg) {
  PingPongBench bench(pair, cfg);
  return bench.run(scheme, l);
}

}  // namespace ncxfer
