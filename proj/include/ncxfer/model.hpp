#pragma once

#include <algorithm>
#include <cstddef>

#include "ncxfer/config.hpp"
#include "ncxfer/layout.hpp"
#include "ncxfer/scheme_id.hpp"

namespace ncxfer {

// Per-operation costs charged by the modeled backend. Times in seconds.
//
// A contiguous send loads and transmits each byte once, overlapped, so it
// costs n*gamma. A user-space gather loads twice the payload (the strided
// reads pull whole cache lines) and its writes hide behind the loads, so it
// costs 2n*beta and must finish before the send can start.
class CostModel {
 public:
  explicit CostModel(const TransportConfig& cfg) : cfg_(cfg), p_(cfg.model) {}

  const TransportConfig& config() const noexcept { return cfg_; }

  std::size_t segments(std::size_t n) const noexcept {
    return (n + cfg_.segment_bytes - 1) / cfg_.segment_bytes;
  }

  bool uses_rendezvous(std::size_t n) const noexcept { return n > cfg_.eager_limit_bytes; }

  // Latency, protocol and segmentation overhead of one message of n bytes.
  double message_overhead(std::size_t n) const noexcept {
    double t = p_.alpha_s;
    if (uses_rendezvous(n)) t += p_.handshake_s;
    return t + static_cast<double>(segments(n)) * p_.per_segment_s;
  }

  double wire(std::size_t n) const noexcept { return static_cast<double>(n) * p_.gamma_s_per_byte; }

  double gather_copy(std::size_t n) const noexcept {
    return 2.0 * static_cast<double>(n) * p_.beta_s_per_byte;
  }

  // Copy of an already contiguous buffer (buffered-send staging).
  double plain_copy(std::size_t n) const noexcept {
    return static_cast<double>(n) * p_.beta_s_per_byte;
  }

  // Wire time still visible after `overlap_credit` seconds of immediately
  // preceding gather work; with NIC offload the two overlap.
  double wire_after_gather(std::size_t n, double overlap_credit) const noexcept {
    if (!p_.nic_offload) return wire(n);
    return std::max(0.0, wire(n) - overlap_credit);
  }

  double fence() const noexcept { return p_.alpha_s + p_.handshake_s; }

  double pack_calls(std::size_t calls) const noexcept {
    return static_cast<double>(calls) * p_.per_call_s;
  }

  // Extra internal-buffer management of typed sends above the threshold.
  double typed_bookkeeping(std::size_t n) const noexcept {
    if (n <= cfg_.large_message_threshold_bytes) return 0.0;
    std::size_t chunks = (n + cfg_.internal_buffer_bytes - 1) / cfg_.internal_buffer_bytes;
    return static_cast<double>(chunks) * p_.bookkeeping_s;
  }

 private:
  TransportConfig cfg_;
  ModelParams p_;
};

struct Prediction {
  SchemeId scheme = SchemeId::Contiguous;
  std::size_t n_bytes = 0;
  double time_s = 0.0;
  double slowdown_vs_contiguous = 1.0;
};

// Predicted time of one ping-pong: the ping of n payload bytes plus, for the
// two-sided schemes, the zero-byte pong. Every pack call costs per_call_s:
// pack-by-element issues one per elem_bytes element, pack-by-vector one.
inline double predict_time(SchemeId scheme, std::size_t n, const TransportConfig& cfg,
                           std::size_t elem_bytes = kDefaultElemBytes) {
  const ModelParams& p = cfg.model;
  const double bytes = static_cast<double>(n);
  const double segs = static_cast<double>((n + cfg.segment_bytes - 1) / cfg.segment_bytes);
  const double gather = 2.0 * bytes * p.beta_s_per_byte;
  const double wire = bytes * p.gamma_s_per_byte;
  const double staged = p.nic_offload ? std::max(gather, wire) : gather + wire;
  const double message = p.alpha_s + (n > cfg.eager_limit_bytes ? p.handshake_s : 0.0) +
                         segs * p.per_segment_s;
  const double pong = p.alpha_s;

  const double manual = message + staged + pong;
  switch (scheme) {
    case SchemeId::Contiguous: return message + wire + pong;
    case SchemeId::ManualCopy: return manual;
    case SchemeId::PackVector: return manual + p.per_call_s;
    case SchemeId::DerivedType: {
      double penalty = 0.0;
      if (n > cfg.large_message_threshold_bytes) {
        const double chunks = static_cast<double>((n + cfg.internal_buffer_bytes - 1) / cfg.internal_buffer_bytes);
        penalty = chunks * p.bookkeeping_s;
      }
      return manual + penalty;
    }
    case SchemeId::BufferedSend: return manual + bytes * p.beta_s_per_byte;
    case SchemeId::OneSidedPut:
      return 2.0 * (p.alpha_s + p.handshake_s) + staged + segs * p.per_segment_s;
    case SchemeId::PackElement:
      return manual + static_cast<double>(n / elem_bytes) * p.per_call_s;
  }
  return 0.0;
}

inline double predict_time(SchemeId scheme, std::size_t n, const ModelParams& p,
                           TransportConfig cfg, std::size_t elem_bytes = kDefaultElemBytes) {
  cfg.model = p;
  return predict_time(scheme, n, cfg, elem_bytes);
}

inline double predict_slowdown(SchemeId scheme, std::size_t n, const TransportConfig& cfg,
                               std::size_t elem_bytes = kDefaultElemBytes) {
  if (scheme == SchemeId::Contiguous) return 1.0;
  return predict_time(scheme, n, cfg, elem_bytes) /
         predict_time(SchemeId::Contiguous, n, cfg, elem_bytes);
}

inline Prediction predict(SchemeId scheme, std::size_t n, const TransportConfig& cfg,
                          std::size_t elem_bytes = kDefaultElemBytes) {
  return {scheme, n, predict_time(scheme, n, cfg, elem_bytes),
          predict_slowdown(scheme, n, cfg, elem_bytes)};
}

// Limit of predict_slowdown as n grows without bound: the ratio of per-byte
// cost coefficients. Fixed terms (latency, handshake, fences) vanish;
// segmentation, per-element calls and typed-send bookkeeping remain.
inline double asymptotic_slowdown(SchemeId scheme, const TransportConfig& cfg,
                                  std::size_t elem_bytes = kDefaultElemBytes) {
  if (scheme == SchemeId::Contiguous) return 1.0;
  const ModelParams& p = cfg.model;
  const double seg = p.per_segment_s / static_cast<double>(cfg.segment_bytes);
  const double gather = 2.0 * p.beta_s_per_byte;
  const double staged = p.nic_offload ? std::max(gather, p.gamma_s_per_byte) : gather + p.gamma_s_per_byte;
  const double contiguous = p.gamma_s_per_byte + seg;
  const double manual = staged + seg;
  double coeff = manual;
  switch (scheme) {
    case SchemeId::Contiguous:
    case SchemeId::ManualCopy:
    case SchemeId::PackVector: break;
    case SchemeId::DerivedType: coeff += p.bookkeeping_s / static_cast<double>(cfg.internal_buffer_bytes); break;
    case SchemeId::BufferedSend: coeff += p.beta_s_per_byte; break;
    case SchemeId::OneSidedPut: break;
    case SchemeId::PackElement: coeff += p.per_call_s / static_cast<double>(elem_bytes); break;
  }
  return coeff / contiguous;
}

}  // namespace ncxfer
