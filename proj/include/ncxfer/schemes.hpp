#pragma once

#include <cstddef>
#include <span>

#include "ncxfer/aligned_buffer.hpp"
#include "ncxfer/layout.hpp"
#include "ncxfer/scheme_id.hpp"
#include "ncxfer/transport/endpoint.hpp"

namespace ncxfer {

// Source bytes follow i mod 251 so a misplaced byte is caught: the prime
// period never lines up with a stride.
inline void fill_pattern(std::span<std::byte> region) {
  for (std::size_t i = 0; i < region.size(); ++i) region[i] = static_cast<std::byte>(i % 251);
}

// Everything the sending side needs for one (scheme, layout) sweep point.
// Built once, untimed; pinging with it never allocates.
struct SenderContext {
  SchemeId scheme = SchemeId::Contiguous;
  Layout layout = Layout::contiguous(0);
  AlignedBuffer source_region;  // the user array; for Contiguous the packed payload itself
  AlignedBuffer send_buffer;    // reused gather/pack target
  std::size_t attached_bytes = 0;
  Window window;

  std::span<const std::byte> source() const noexcept { return source_region.span(); }
  std::span<const std::byte> send_bytes() const noexcept {
    return scheme == SchemeId::Contiguous ? source_region.span() : send_buffer.span();
  }
};

// The receiving side always lands the data in one contiguous buffer.
struct ReceiverContext {
  SchemeId scheme = SchemeId::Contiguous;
  AlignedBuffer recv_buffer;
  std::size_t expected_bytes = 0;
  std::size_t received_bytes = 0;
  Window window;

  std::span<const std::byte> received() const noexcept {
    return recv_buffer.span().first(received_bytes);
  }
};

// Sender-side setup. OneSidedPut creates a window, which is collective:
// the peer must run prepare_receiver concurrently.
inline SenderContext prepare(SchemeId scheme, const Layout& l, Endpoint& ep) {
  SenderContext ctx;
  ctx.scheme = scheme;
  ctx.layout = l;
  const std::size_t payload = l.payload_bytes();

  AlignedBuffer pattern(l.extent_bytes());
  fill_pattern(pattern.span());
  if (scheme == SchemeId::Contiguous) {
    // The baseline sends data that already sits contiguously in memory.
    ctx.source_region = AlignedBuffer(payload);
    gather(l, pattern.span(), ctx.source_region.span());
  } else {
    ctx.source_region = std::move(pattern);
  }

  switch (scheme) {
    case SchemeId::Contiguous: break;
    case SchemeId::ManualCopy:
    case SchemeId::PackElement:
    case SchemeId::PackVector: ctx.send_buffer = AlignedBuffer(payload); break;
    case SchemeId::BufferedSend:
      ctx.send_buffer = AlignedBuffer(payload);
      ctx.attached_bytes = payload + kBsendOverheadBytes;
      ep.attach_buffer(ctx.attached_bytes);
      break;
    case SchemeId::DerivedType: ep.reserve_staging(payload); break;
    case SchemeId::OneSidedPut: ctx.window = ep.create_window({}); break;
  }
  return ctx;
}

inline ReceiverContext prepare_receiver(SchemeId scheme, const Layout& l, Endpoint& ep) {
  ReceiverContext ctx;
  ctx.scheme = scheme;
  ctx.expected_bytes = l.payload_bytes();
  ctx.recv_buffer = AlignedBuffer(ctx.expected_bytes);
  if (scheme == SchemeId::OneSidedPut) ctx.window = ep.create_window(ctx.recv_buffer.span());
  return ctx;
}

// The timed non-contiguous send.
inline void ping(SenderContext& ctx, Endpoint& ep) {
  const Layout& l = ctx.layout;
  const auto src = ctx.source();
  const auto buf = ctx.send_buffer.span();
  switch (ctx.scheme) {
    case SchemeId::Contiguous:
      ep.send(src);
      break;
    case SchemeId::ManualCopy:
      ep.user_gather(l, src, buf);
      ep.send(buf);
      break;
    case SchemeId::DerivedType:
      ep.typed_send(l, src);
      break;
    case SchemeId::BufferedSend:
      ep.user_gather(l, src, buf);
      ep.bsend(buf);
      break;
    case SchemeId::OneSidedPut:
      ctx.window.fence();
      ctx.window.put(l, src, 0);
      ctx.window.fence();
      break;
    case SchemeId::PackElement: {
      // One pack call per element, threading the position through.
      const std::size_t eb = l.elem_bytes();
      const Layout one = Layout::contiguous(1, eb);
      std::size_t position = 0;
      l.for_each_element([&](std::size_t off) { position = ep.pack(one, src.subspan(off, eb), buf, position); });
      ep.send(buf.first(position));
      break;
    }
    case SchemeId::PackVector: {
      const std::size_t position = ep.pack(l, src, buf, 0);
      ep.send(buf.first(position));
      break;
    }
  }
}

// Receiver half of a ping: one contiguous receive, or the two fences that
// bracket a one-sided transfer.
inline void catch_ping(ReceiverContext& ctx, Endpoint& ep) {
  if (is_one_sided(ctx.scheme)) {
    ctx.window.fence();
    ctx.window.fence();
    ctx.received_bytes = ctx.expected_bytes;
    return;
  }
  ctx.received_bytes = ep.recv(ctx.recv_buffer.span());
  if (ctx.received_bytes != ctx.expected_bytes) throw ProtocolError("ping delivered an unexpected length");
}

// Zero-byte return message of the two-sided schemes. The closing fence
// already completes a one-sided round trip.
inline void pong(SchemeId scheme, Endpoint& ep) {
  if (!is_one_sided(scheme)) ep.send({});
}

inline void await_pong(SchemeId scheme, Endpoint& ep) {
  if (is_one_sided(scheme)) return;
  try {
    ep.recv(std::span<std::byte>{});
  } catch (const Truncated&) {
    throw ProtocolError("expected a zero-byte pong");
  }
}

}  // namespace ncxfer
