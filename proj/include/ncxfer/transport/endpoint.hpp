#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ncxfer/aligned_buffer.hpp"
#include "ncxfer/config.hpp"
#include "ncxfer/errors.hpp"
#include "ncxfer/layout.hpp"

namespace ncxfer {

enum class Backend { InProc, Tcp, Modeled };

constexpr std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::InProc: return "inproc";
    case Backend::Tcp: return "tcp";
    case Backend::Modeled: return "modeled";
  }
  return "?";
}

constexpr std::optional<Backend> parse_backend(std::string_view s) {
  for (Backend b : {Backend::InProc, Backend::Tcp, Backend::Modeled})
    if (backend_name(b) == s) return b;
  return std::nullopt;
}

// Bookkeeping bytes reserved in the attached buffer for every buffered send,
// on top of the payload itself.
inline constexpr std::size_t kBsendOverheadBytes = 64;

// Simulated time shared by the two endpoints of a modeled pair. `lap`
// accumulates from the last `mark` so repeated intervals of identical work
// read back bit-identical regardless of how far the clock has advanced.
class VirtualClock {
 public:
  double now() const {
    std::lock_guard lk(m_);
    return total_;
  }
  void mark() {
    std::lock_guard lk(m_);
    lap_ = 0.0;
  }
  double lap() const {
    std::lock_guard lk(m_);
    return lap_;
  }
  void advance(double seconds) {
    std::lock_guard lk(m_);
    total_ += seconds;
    lap_ += seconds;
  }

 private:
  mutable std::mutex m_;
  double total_ = 0.0;
  double lap_ = 0.0;
};

struct TransferStats {
  std::size_t messages_sent = 0;
  std::size_t eager_sent = 0;
  std::size_t rendezvous_sent = 0;
  std::size_t segments_received = 0;
};

namespace detail {

class WindowBackend {
 public:
  virtual ~WindowBackend() = default;
  virtual void fence() = 0;
  virtual void put(std::span<const std::byte> bytes, std::size_t target_offset) = 0;
  virtual void put(const Layout& l, std::span<const std::byte> source, std::size_t target_offset) = 0;
  virtual std::size_t target_size() const = 0;
};

}  // namespace detail

// One side of a one-sided communication window. Fences are collective:
// both sides call them, and they alternately open and close an exposure
// epoch. Puts write into the peer's exposed region and are legal only
// while an epoch is open. A Window must not outlive the endpoint that
// created it.
class Window {
 public:
  Window() = default;
  Window(std::unique_ptr<detail::WindowBackend> impl, std::span<std::byte> local)
      : impl_(std::move(impl)), local_(local) {}

  void fence() {
    impl_->fence();
    exposed_ = !exposed_;
    ++fences_;
  }

  void put(std::span<const std::byte> bytes, std::size_t target_offset) {
    check_put(bytes.size(), target_offset);
    impl_->put(bytes, target_offset);
  }

  // Delivers gather(l, source) contiguously at target_offset.
  void put(const Layout& l, std::span<const std::byte> source, std::size_t target_offset) {
    check_put(l.payload_bytes(), target_offset);
    if (source.size() < l.extent_bytes()) throw SourceTooSmall("put source shorter than layout extent");
    impl_->put(l, source, target_offset);
  }

  bool valid() const noexcept { return impl_ != nullptr; }
  bool exposed() const noexcept { return exposed_; }
  std::size_t fence_count() const noexcept { return fences_; }
  std::size_t size_bytes() const noexcept { return local_.size(); }
  std::size_t target_size() const { return impl_->target_size(); }
  std::span<std::byte> local() const noexcept { return local_; }

 private:
  void check_put(std::size_t len, std::size_t offset) const {
    if (!exposed_) throw EpochViolation("put outside a fence epoch");
    const std::size_t target = impl_->target_size();
    if (offset > target || len > target - offset) throw RangeError("put exceeds target window");
  }

  std::unique_ptr<detail::WindowBackend> impl_;
  std::span<std::byte> local_;
  bool exposed_ = false;
  std::size_t fences_ = 0;
};

// One end of a point-to-point link. Each endpoint is driven by one thread at
// a time; the link itself is the only synchronization between the two.
//
// Sends up to eager_limit_bytes complete without the receiver; larger sends
// block until the receiver has matched them.
class Endpoint {
 public:
  explicit Endpoint(TransportConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }
  virtual ~Endpoint() = default;
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  virtual Backend backend() const noexcept = 0;

  virtual void send(std::span<const std::byte> bytes) = 0;

  // Receives the next message into dest and returns its length. Throws
  // Truncated if the message is longer than dest.
  virtual std::size_t recv(std::span<std::byte> dest) = 0;

  std::vector<std::byte> recv_vector(std::size_t max_bytes) {
    std::vector<std::byte> out(max_bytes);
    out.resize(recv(out));
    return out;
  }

  // Replaces the buffered-send staging area with a fresh n-byte buffer.
  virtual void attach_buffer(std::size_t n_bytes) = 0;

  // Copies bytes into the attached buffer and returns without waiting for
  // the receiver. Throws BufferExhausted if the attached buffer cannot hold
  // the message and its bookkeeping overhead next to what is outstanding.
  virtual void bsend(std::span<const std::byte> bytes) = 0;

  // Sends gather(l, source): the layout is packed into an internal staging
  // buffer, then sent as one contiguous message.
  virtual void typed_send(const Layout& l, std::span<const std::byte> source) = 0;

  // Collective: both endpoints call it, each exposing its own region.
  virtual Window create_window(std::span<std::byte> region) = 0;

  // Uncharged synchronization of both endpoints.
  virtual void barrier() = 0;

  virtual void close() noexcept = 0;

  // User-space gather. Modeled endpoints charge its cost to the virtual
  // clock at the next communication call.
  void user_gather(const Layout& l, std::span<const std::byte> source, std::span<std::byte> out) {
    gather(l, source, out);
    charge_local(0, l.payload_bytes());
  }

  // Packs gather(l, source) into out at position and returns the advanced
  // position.
  std::size_t pack(const Layout& l, std::span<const std::byte> source, std::span<std::byte> out,
                   std::size_t position) {
    const std::size_t n = l.payload_bytes();
    if (position > out.size() || n > out.size() - position) throw DestTooSmall("pack output buffer overflow");
    gather(l, source, out.subspan(position));
    charge_local(1, n);
    return position + n;
  }

  // Pre-sizes the typed-send staging buffer so later sends do not allocate.
  void reserve_staging(std::size_t n) { staging_.reserve(n); }

  const TransportConfig& config() const noexcept { return cfg_; }
  const TransferStats& stats() const noexcept { return stats_; }

 protected:
  virtual void charge_local(std::size_t pack_calls, std::size_t gathered_bytes) {
    (void)pack_calls;
    (void)gathered_bytes;
  }

  std::span<const std::byte> stage(const Layout& l, std::span<const std::byte> source) {
    if (source.size() < l.extent_bytes()) throw SourceTooSmall("typed send source shorter than layout extent");
    staging_.reserve(l.payload_bytes());
    auto out = staging_.span().first(l.payload_bytes());
    gather(l, source, out);
    return out;
  }

  TransportConfig cfg_;
  TransferStats stats_;
  AlignedBuffer staging_;
};

}  // namespace ncxfer
