#pragma once

#include <algorithm>
#include <cassert>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "ncxfer/model.hpp"
#include "ncxfer/transport/endpoint.hpp"

namespace ncxfer {

namespace detail {

// Fixed-capacity byte FIFO with wrap-around.
class ByteRing {
 public:
  void reset(std::size_t capacity) {
    buf_ = AlignedBuffer(capacity);
    head_ = size_ = 0;
  }
  std::size_t capacity() const noexcept { return buf_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t free() const noexcept { return capacity() - size_; }

  void write(std::span<const std::byte> in) {
    assert(in.size() <= free());
    if (in.empty()) return;
    const std::size_t cap = capacity();
    const std::size_t tail = (head_ + size_) % cap;
    const std::size_t first = std::min(in.size(), cap - tail);
    std::memcpy(buf_.data() + tail, in.data(), first);
    std::memcpy(buf_.data(), in.data() + first, in.size() - first);
    size_ += in.size();
  }

  void read(std::span<std::byte> out) {
    assert(out.size() <= size_);
    if (out.empty()) return;
    const std::size_t cap = capacity();
    const std::size_t first = std::min(out.size(), cap - head_);
    std::memcpy(out.data(), buf_.data() + head_, first);
    std::memcpy(out.data() + first, buf_.data(), out.size() - first);
    drop(out.size());
  }

  void drop(std::size_t n) {
    assert(n <= size_);
    size_ -= n;
    head_ = size_ == 0 ? 0 : (head_ + n) % capacity();
  }

 private:
  AlignedBuffer buf_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

enum class MsgKind : std::uint8_t { Eager, Rendezvous, Buffered };

struct MsgHeader {
  MsgKind kind = MsgKind::Eager;
  std::size_t len = 0;
};

// Fixed-capacity queue of message headers; never allocates after construction.
class HeaderQueue {
 public:
  explicit HeaderQueue(std::size_t capacity = 1024) : slots_(capacity) {}
  bool empty() const noexcept { return count_ == 0; }
  bool full() const noexcept { return count_ == slots_.size(); }
  void push(MsgHeader h) {
    assert(!full());
    slots_[(head_ + count_) % slots_.size()] = h;
    ++count_;
  }
  const MsgHeader& front() const {
    assert(!empty());
    return slots_[head_];
  }
  void pop() {
    assert(!empty());
    head_ = (head_ + 1) % slots_.size();
    --count_;
  }

 private:
  std::vector<MsgHeader> slots_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

// Messages travelling from one side to the other.
struct Direction {
  ByteRing eager;
  HeaderQueue headers;
  ByteRing attached;                 // the sender's attached bsend buffer
  std::size_t attached_capacity = 0;
  std::size_t attached_used = 0;     // payload plus per-message overhead
  const std::byte* rendezvous_src = nullptr;
  bool rendezvous_done = false;
};

struct InProcWindowShared {
  std::span<std::byte> region[2];
  double pending_cost_s = 0.0;       // transfer cost charged at the closing fence
};

struct InProcShared {
  explicit InProcShared(const TransportConfig& c, std::shared_ptr<VirtualClock> clk)
      : cfg(c), clock(std::move(clk)) {
    for (auto& d : dir) d.eager.reset(cfg.internal_buffer_bytes);
  }

  TransportConfig cfg;
  std::shared_ptr<VirtualClock> clock;  // null for the plain in-process backend
  std::mutex m;
  std::condition_variable cv;
  Direction dir[2];                     // dir[s] holds messages sent by side s
  bool closed[2] = {false, false};
  int arrived = 0;
  std::uint64_t generation = 0;
  std::shared_ptr<InProcWindowShared> window_slot;

  void ensure_open(int side) const {
    if (closed[side]) throw ProtocolError("endpoint is closed");
  }

  // Two-party barrier. The second thread to arrive runs on_complete while
  // holding the lock, before either side is released.
  template <class F>
  void sync(int side, F&& on_complete) {
    std::unique_lock lk(m);
    ensure_open(side);
    if (arrived == 0) {
      arrived = 1;
      const auto gen = generation;
      const int peer = 1 - side;
      cv.wait(lk, [&] { return generation != gen || closed[peer]; });
      if (generation == gen) {
        arrived = 0;
        throw PeerClosed("peer closed during synchronization");
      }
      return;
    }
    on_complete();
    arrived = 0;
    ++generation;
    cv.notify_all();
  }
};

}  // namespace detail

// Endpoint of an in-process pair. Bytes are really copied: eager messages
// through a bounded internal buffer, rendezvous messages directly from the
// sender's memory in segment_bytes pieces. With a virtual clock attached the
// endpoint is the modeled backend and charges every operation's modeled
// cost to that clock.
class InProcEndpoint final : public Endpoint {
 public:
  InProcEndpoint(std::shared_ptr<detail::InProcShared> shared, int side)
      : Endpoint(shared->cfg), shared_(std::move(shared)), side_(side), costs_(cfg_) {}

  ~InProcEndpoint() override { close(); }

  Backend backend() const noexcept override {
    return shared_->clock ? Backend::Modeled : Backend::InProc;
  }

  void send(std::span<const std::byte> bytes) override {
    if (auto* clk = clock()) {
      const std::size_t n = bytes.size();
      double credit = 0.0;
      double cost = take_local_cost(credit);
      cost += costs_.message_overhead(n) + costs_.wire_after_gather(n, credit);
      clk->advance(cost);
    }
    deliver(bytes);
  }

  std::size_t recv(std::span<std::byte> dest) override {
    auto& s = *shared_;
    std::unique_lock lk(s.m);
    s.ensure_open(side_);
    auto& in = s.dir[peer()];
    s.cv.wait(lk, [&] { return !in.headers.empty() || s.closed[peer()]; });
    if (in.headers.empty()) throw PeerClosed("peer closed before sending");
    const detail::MsgHeader h = in.headers.front();
    in.headers.pop();
    const bool fits = h.len <= dest.size();
    switch (h.kind) {
      case detail::MsgKind::Eager:
        if (fits) in.eager.read(dest.first(h.len));
        else in.eager.drop(h.len);
        s.cv.notify_all();
        break;
      case detail::MsgKind::Buffered:
        if (fits) in.attached.read(dest.first(h.len));
        else in.attached.drop(h.len);
        in.attached_used -= h.len + kBsendOverheadBytes;
        s.cv.notify_all();
        break;
      case detail::MsgKind::Rendezvous: {
        const std::byte* src = in.rendezvous_src;
        lk.unlock();
        if (fits) {
          const std::size_t seg = cfg_.segment_bytes;
          for (std::size_t off = 0; off < h.len; off += seg) {
            std::memcpy(dest.data() + off, src + off, std::min(seg, h.len - off));
            ++stats_.segments_received;
          }
        }
        lk.lock();
        in.rendezvous_done = true;
        s.cv.notify_all();
        break;
      }
    }
    if (!fits) throw Truncated("message of " + std::to_string(h.len) + " bytes exceeds receive buffer");
    if (h.kind != detail::MsgKind::Rendezvous && h.len > 0) ++stats_.segments_received;
    return h.len;
  }

  void attach_buffer(std::size_t n_bytes) override {
    auto& s = *shared_;
    std::lock_guard lk(s.m);
    s.ensure_open(side_);
    auto& out = s.dir[side_];
    if (out.attached_used != 0) throw ProtocolError("cannot replace attached buffer with sends outstanding");
    out.attached.reset(n_bytes);
    out.attached_capacity = n_bytes;
  }

  void bsend(std::span<const std::byte> bytes) override {
    const std::size_t n = bytes.size();
    auto& s = *shared_;
    std::unique_lock lk(s.m);
    {
      s.ensure_open(side_);
      auto& out = s.dir[side_];
      if (out.attached_capacity == 0) throw BufferExhausted("no buffer attached");
      if (out.attached_used + n + kBsendOverheadBytes > out.attached_capacity)
        throw BufferExhausted("attached buffer exhausted");
      s.cv.wait(lk, [&] { return !out.headers.full() || s.closed[peer()]; });
      if (out.headers.full()) throw PeerClosed("peer closed");
      if (auto* clk = clock()) {
        double credit = 0.0;
        double cost = take_local_cost(credit);
        cost += costs_.plain_copy(n) + costs_.message_overhead(n) + costs_.wire_after_gather(n, credit);
        clk->advance(cost);
      }
      out.attached.write(bytes);
      out.attached_used += n + kBsendOverheadBytes;
      assert(out.attached_used <= out.attached_capacity);
      out.headers.push({detail::MsgKind::Buffered, n});
      ++stats_.messages_sent;
      ++(costs_.uses_rendezvous(n) ? stats_.rendezvous_sent : stats_.eager_sent);
      s.cv.notify_all();
    }
  }

  void typed_send(const Layout& l, std::span<const std::byte> source) override {
    auto staged = stage(l, source);
    if (auto* clk = clock()) {
      const std::size_t n = staged.size();
      double credit = 0.0;
      double cost = take_local_cost(credit);
      const double gather_cost = costs_.gather_copy(n);
      cost += gather_cost + costs_.message_overhead(n) +
              costs_.wire_after_gather(n, credit + gather_cost) + costs_.typed_bookkeeping(n);
      clk->advance(cost);
    }
    deliver(staged);
  }

  Window create_window(std::span<std::byte> region) override;

  void barrier() override {
    shared_->sync(side_, [] {});
  }

  void close() noexcept override {
    std::lock_guard lk(shared_->m);
    shared_->closed[side_] = true;
    shared_->cv.notify_all();
  }

  // Window data paths; called by this endpoint's windows.
  void window_put(detail::InProcWindowShared& w, std::span<const std::byte> bytes, std::size_t offset) {
    std::memcpy(w.region[peer()].data() + offset, bytes.data(), bytes.size());
    if (clock()) {
      const std::size_t n = bytes.size();
      double credit = 0.0;
      double cost = take_local_cost(credit);
      cost += costs_.wire_after_gather(n, credit) + segment_cost(n);
      add_pending(w, cost);
    }
  }

  void window_put(detail::InProcWindowShared& w, const Layout& l, std::span<const std::byte> source,
                  std::size_t offset) {
    const std::size_t n = l.payload_bytes();
    gather(l, source, w.region[peer()].subspan(offset, n));
    if (clock()) {
      double credit = 0.0;
      double cost = take_local_cost(credit);
      const double gather_cost = costs_.gather_copy(n);
      cost += gather_cost + costs_.wire_after_gather(n, credit + gather_cost) + segment_cost(n);
      add_pending(w, cost);
    }
  }

  void window_fence(detail::InProcWindowShared& w) {
    VirtualClock* clk = clock();
    const double fence_cost = costs_.fence();
    shared_->sync(side_, [&] {
      if (clk != nullptr) {
        clk->advance(fence_cost + w.pending_cost_s);
        w.pending_cost_s = 0.0;
      }
    });
  }

  int side() const noexcept { return side_; }
  int peer() const noexcept { return 1 - side_; }

 protected:
  void charge_local(std::size_t pack_calls, std::size_t gathered_bytes) override {
    pending_pack_calls_ += pack_calls;
    pending_gather_bytes_ += gathered_bytes;
  }

 private:
  VirtualClock* clock() const noexcept { return shared_->clock.get(); }

  // Cost of user-space work since the last communication call. Integer
  // counters keep the charge exact however many small packs preceded it.
  double take_local_cost(double& overlap_credit) {
    const double gather_cost = costs_.gather_copy(pending_gather_bytes_);
    const double cost = costs_.pack_calls(pending_pack_calls_) + gather_cost;
    overlap_credit += gather_cost;
    pending_pack_calls_ = 0;
    pending_gather_bytes_ = 0;
    return cost;
  }

  double segment_cost(std::size_t n) const {
    return static_cast<double>(costs_.segments(n)) * cfg_.model.per_segment_s;
  }

  void add_pending(detail::InProcWindowShared& w, double cost) {
    std::lock_guard lk(shared_->m);
    w.pending_cost_s += cost;
  }

  void deliver(std::span<const std::byte> bytes) {
    auto& s = *shared_;
    auto& out = s.dir[side_];
    const std::size_t n = bytes.size();
    std::unique_lock lk(s.m);
    s.ensure_open(side_);
    ++stats_.messages_sent;
    if (!costs_.uses_rendezvous(n)) {
      ++stats_.eager_sent;
      s.cv.wait(lk, [&] { return (!out.headers.full() && out.eager.free() >= n) || s.closed[peer()]; });
      if (s.closed[peer()]) throw PeerClosed("peer closed");
      out.eager.write(bytes);
      out.headers.push({detail::MsgKind::Eager, n});
      s.cv.notify_all();
      return;
    }
    ++stats_.rendezvous_sent;
    s.cv.wait(lk, [&] { return !out.headers.full() || s.closed[peer()]; });
    if (s.closed[peer()]) throw PeerClosed("peer closed");
    out.rendezvous_src = bytes.data();
    out.rendezvous_done = false;
    out.headers.push({detail::MsgKind::Rendezvous, n});
    s.cv.notify_all();
    s.cv.wait(lk, [&] { return out.rendezvous_done || s.closed[peer()]; });
    if (!out.rendezvous_done) throw PeerClosed("peer closed before matching a rendezvous send");
    out.rendezvous_src = nullptr;
  }

  std::shared_ptr<detail::InProcShared> shared_;
  int side_;
  CostModel costs_;
  std::size_t pending_pack_calls_ = 0;
  std::size_t pending_gather_bytes_ = 0;
};

namespace detail {

class InProcWindowBackend final : public WindowBackend {
 public:
  InProcWindowBackend(InProcEndpoint* ep, std::shared_ptr<InProcWindowShared> w)
      : ep_(ep), w_(std::move(w)) {}

  void fence() override { ep_->window_fence(*w_); }
  void put(std::span<const std::byte> bytes, std::size_t off) override { ep_->window_put(*w_, bytes, off); }
  void put(const Layout& l, std::span<const std::byte> src, std::size_t off) override {
    ep_->window_put(*w_, l, src, off);
  }
  std::size_t target_size() const override { return w_->region[ep_->peer()].size(); }

 private:
  InProcEndpoint* ep_;
  std::shared_ptr<InProcWindowShared> w_;
};

}  // namespace detail

inline Window InProcEndpoint::create_window(std::span<std::byte> region) {
  std::shared_ptr<detail::InProcWindowShared> w;
  {
    std::lock_guard lk(shared_->m);
    shared_->ensure_open(side_);
    if (!shared_->window_slot) shared_->window_slot = std::make_shared<detail::InProcWindowShared>();
    w = shared_->window_slot;
    w->region[side_] = region;
  }
  shared_->sync(side_, [&] { shared_->window_slot.reset(); });
  return Window(std::make_unique<detail::InProcWindowBackend>(this, std::move(w)), region);
}

}  // namespace ncxfer
