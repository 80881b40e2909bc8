#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <thread>

#include "ncxfer/transport/endpoint.hpp"

namespace ncxfer {

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) noexcept : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

inline void encode_u64_le(std::uint64_t v, std::byte* out) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
}

inline std::uint64_t decode_u64_le(const std::byte* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace detail

// Listening socket on the loopback interface (or a given host address).
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port = 0, const std::string& host = "127.0.0.1") {
    fd_ = detail::Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd_) throw TcpBindFailure(detail::errno_text("socket"));
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
      throw TcpBindFailure("bad listen address " + host);
    if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw TcpBindFailure(detail::errno_text(("bind port " + std::to_string(port)).c_str()));
    if (::listen(fd_.get(), 4) != 0) throw TcpBindFailure(detail::errno_text("listen"));
    socklen_t len = sizeof addr;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  std::uint16_t port() const noexcept { return port_; }

  detail::Fd accept() {
    int c = ::accept(fd_.get(), nullptr, nullptr);
    if (c < 0) throw Error(detail::errno_text("accept"));
    return detail::Fd(c);
  }

 private:
  detail::Fd fd_;
  std::uint16_t port_ = 0;
};

// Stream endpoint. Every message is framed as an 8-byte little-endian length
// followed by the payload. Eager/rendezvous behaviour is whatever the kernel
// socket buffers provide.
//
// Buffered sends are copied into the attached buffer and written from there;
// the attached space is released once the kernel has accepted the frame.
//
// One-sided windows travel on the same stream: a put is a frame holding an
// 8-byte target offset and the data, and a fence is an empty frame in each
// direction. An empty frame is also the barrier token.
class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(detail::Fd fd, TransportConfig cfg) : Endpoint(std::move(cfg)), fd_(std::move(fd)) {
    int one = 1;
    ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  ~TcpEndpoint() override { close(); }

  static std::unique_ptr<TcpEndpoint> dial(const std::string& host, std::uint16_t port, TransportConfig cfg,
                                           std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr)
      throw Error("cannot resolve " + host);
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      detail::Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
      if (!fd) throw Error(detail::errno_text("socket"));
      if (::connect(fd.get(), res->ai_addr, res->ai_addrlen) == 0)
        return std::make_unique<TcpEndpoint>(std::move(fd), std::move(cfg));
      if (std::chrono::steady_clock::now() > deadline)
        throw Error(detail::errno_text(("connect " + host + ":" + std::to_string(port)).c_str()));
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }

  Backend backend() const noexcept override { return Backend::Tcp; }

  void send(std::span<const std::byte> bytes) override {
    write_frame_header(bytes.size());
    write_payload(bytes);
    ++stats_.messages_sent;
    ++(bytes.size() > cfg_.eager_limit_bytes ? stats_.rendezvous_sent : stats_.eager_sent);
  }

  std::size_t recv(std::span<std::byte> dest) override {
    const std::size_t len = read_frame_header();
    if (len > dest.size()) {
      discard(len);
      throw Truncated("message of " + std::to_string(len) + " bytes exceeds receive buffer");
    }
    read_payload(dest.first(len));
    return len;
  }

  void attach_buffer(std::size_t n_bytes) override {
    attached_ = AlignedBuffer(n_bytes);
  }

  void bsend(std::span<const std::byte> bytes) override {
    if (attached_.empty()) throw BufferExhausted("no buffer attached");
    if (bytes.size() + kBsendOverheadBytes > attached_.size()) throw BufferExhausted("attached buffer exhausted");
    std::memcpy(attached_.data(), bytes.data(), bytes.size());
    send(attached_.span().first(bytes.size()));
  }

  void typed_send(const Layout& l, std::span<const std::byte> source) override { send(stage(l, source)); }

  Window create_window(std::span<std::byte> region) override;

  void barrier() override {
    write_frame_header(0);
    if (read_frame_header() != 0) throw ProtocolError("expected barrier token");
  }

  void close() noexcept override {
    if (fd_) ::shutdown(fd_.get(), SHUT_RDWR);
    fd_.reset();
  }

  // Window protocol; used by TcpWindowBackend.
  std::size_t exchange_window_size(std::size_t mine) {
    std::byte buf[8];
    detail::encode_u64_le(mine, buf);
    write_frame_header(8);
    write_all(buf, 8);
    if (read_frame_header() != 8) throw ProtocolError("expected window size frame");
    read_all(buf, 8);
    return detail::decode_u64_le(buf);
  }

  void fence_exchange(std::span<std::byte> local) {
    write_frame_header(0);
    while (true) {
      const std::size_t len = read_frame_header();
      if (len == 0) return;
      if (len < 8) throw ProtocolError("short put frame");
      std::byte buf[8];
      read_all(buf, 8);
      const std::uint64_t off = detail::decode_u64_le(buf);
      const std::size_t n = len - 8;
      if (off > local.size() || n > local.size() - off) throw ProtocolError("put frame outside window");
      read_payload(local.subspan(off, n));
    }
  }

  void put_frame(std::span<const std::byte> bytes, std::size_t offset) {
    std::byte buf[8];
    detail::encode_u64_le(offset, buf);
    write_frame_header(bytes.size() + 8);
    write_all(buf, 8);
    write_payload(bytes);
  }

  std::span<const std::byte> stage_for_put(const Layout& l, std::span<const std::byte> source) {
    return stage(l, source);
  }

 private:
  void write_frame_header(std::size_t len) {
    std::byte hdr[8];
    detail::encode_u64_le(len, hdr);
    write_all(hdr, 8);
  }

  std::size_t read_frame_header() {
    std::byte hdr[8];
    read_all(hdr, 8);
    return static_cast<std::size_t>(detail::decode_u64_le(hdr));
  }

  void write_payload(std::span<const std::byte> bytes) {
    const std::size_t seg = cfg_.segment_bytes;
    for (std::size_t off = 0; off < bytes.size(); off += seg)
      write_all(bytes.data() + off, std::min(seg, bytes.size() - off));
  }

  void read_payload(std::span<std::byte> dest) {
    const std::size_t seg = cfg_.segment_bytes;
    for (std::size_t off = 0; off < dest.size(); off += seg) {
      read_all(dest.data() + off, std::min(seg, dest.size() - off));
      ++stats_.segments_received;
    }
  }

  void discard(std::size_t n) {
    std::byte sink[4096];
    while (n > 0) {
      const std::size_t k = std::min(n, sizeof sink);
      read_all(sink, k);
      n -= k;
    }
  }

  void write_all(const std::byte* p, std::size_t n) {
    if (!fd_) throw ProtocolError("endpoint is closed");
    while (n > 0) {
      ssize_t k = ::send(fd_.get(), p, n, MSG_NOSIGNAL);
      if (k < 0) {
        if (errno == EINTR) continue;
        throw PeerClosed(detail::errno_text("send"));
      }
      p += k;
      n -= static_cast<std::size_t>(k);
    }
  }

  void read_all(std::byte* p, std::size_t n) {
    if (!fd_) throw ProtocolError("endpoint is closed");
    while (n > 0) {
      ssize_t k = ::recv(fd_.get(), p, n, 0);
      if (k == 0) throw PeerClosed("peer closed the connection");
      if (k < 0) {
        if (errno == EINTR) continue;
        throw PeerClosed(detail::errno_text("recv"));
      }
      p += k;
      n -= static_cast<std::size_t>(k);
    }
  }

  detail::Fd fd_;
  AlignedBuffer attached_;
};

namespace detail {

class TcpWindowBackend final : public WindowBackend {
 public:
  TcpWindowBackend(TcpEndpoint* ep, std::span<std::byte> local, std::size_t target)
      : ep_(ep), local_(local), target_(target) {}

  void fence() override { ep_->fence_exchange(local_); }
  void put(std::span<const std::byte> bytes, std::size_t off) override { ep_->put_frame(bytes, off); }
  void put(const Layout& l, std::span<const std::byte> src, std::size_t off) override {
    ep_->put_frame(ep_->stage_for_put(l, src), off);
  }
  std::size_t target_size() const override { return target_; }

 private:
  TcpEndpoint* ep_;
  std::span<std::byte> local_;
  std::size_t target_;
};

}  // namespace detail

inline Window TcpEndpoint::create_window(std::span<std::byte> region) {
  const std::size_t target = exchange_window_size(region.size());
  // Stage typed puts without allocating inside an epoch.
  reserve_staging(target);
  return Window(std::make_unique<detail::TcpWindowBackend>(this, region, target), region);
}

}  // namespace ncxfer
