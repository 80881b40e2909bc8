#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "ncxfer/errors.hpp"

namespace ncxfer {

// Double-precision arrays are the benchmark's data type.
inline constexpr std::size_t kDefaultElemBytes = 8;

// All counts, lengths, strides and displacements are in elements.
struct Contiguous {
  std::size_t count = 0;
};

struct Vector {
  std::size_t count = 0;
  std::size_t blocklen = 1;
  std::size_t stride = 1;
};

struct Block {
  std::size_t displacement = 0;
  std::size_t blocklen = 1;
  bool operator==(const Block&) const = default;
};

struct Indexed {
  std::vector<Block> blocks;
};

// A byte range of the source region: the canonical flattened form of a layout.
struct Span {
  std::size_t offset_bytes = 0;
  std::size_t len_bytes = 0;
  bool operator==(const Span&) const = default;
};

namespace detail {

inline std::size_t checked_mul(std::size_t a, std::size_t b) {
  std::size_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw InvalidLayout("layout size overflows");
  return r;
}

inline std::size_t checked_add(std::size_t a, std::size_t b) {
  std::size_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw InvalidLayout("layout size overflows");
  return r;
}

}  // namespace detail

// Description of a (possibly) non-contiguous region of typed elements.
// Immutable once constructed; the factories reject overlapping blocks.
class Layout {
 public:
  using Kind = std::variant<Contiguous, Vector, Indexed>;

  static Layout contiguous(std::size_t count, std::size_t elem_bytes = kDefaultElemBytes) {
    return Layout(Contiguous{count}, elem_bytes);
  }

  static Layout vector(std::size_t count, std::size_t blocklen, std::size_t stride,
                       std::size_t elem_bytes = kDefaultElemBytes) {
    return Layout(Vector{count, blocklen, stride}, elem_bytes);
  }

  static Layout indexed(std::vector<Block> blocks, std::size_t elem_bytes = kDefaultElemBytes) {
    return Layout(Indexed{std::move(blocks)}, elem_bytes);
  }

  const Kind& kind() const noexcept { return kind_; }
  std::size_t elem_bytes() const noexcept { return elem_bytes_; }
  std::size_t payload_bytes() const noexcept { return payload_bytes_; }
  std::size_t extent_bytes() const noexcept { return extent_bytes_; }
  std::size_t element_count() const noexcept { return payload_bytes_ / elem_bytes_; }
  bool is_contiguous() const noexcept { return payload_bytes_ == extent_bytes_; }

  // Visits every block as (offset_bytes, len_bytes) in ascending offset order,
  // without coalescing.
  template <class F>
  void for_each_block(F&& fn) const {
    const std::size_t eb = elem_bytes_;
    if (const auto* c = std::get_if<Contiguous>(&kind_)) {
      if (c->count > 0) fn(std::size_t{0}, c->count * eb);
    } else if (const auto* v = std::get_if<Vector>(&kind_)) {
      const std::size_t block = v->blocklen * eb;
      const std::size_t stride = v->stride * eb;
      for (std::size_t i = 0; i < v->count; ++i) fn(i * stride, block);
    } else {
      for (const Block& b : std::get<Indexed>(kind_).blocks)
        fn(b.displacement * eb, b.blocklen * eb);
    }
  }

  // Like for_each_block, but adjacent blocks are merged so no two visited
  // spans touch.
  template <class F>
  void for_each_span(F&& fn) const {
    if (const auto* v = std::get_if<Vector>(&kind_); v != nullptr && v->stride == v->blocklen) {
      if (v->count > 0) fn(std::size_t{0}, payload_bytes_);
      return;
    }
    bool open = false;
    std::size_t start = 0;
    std::size_t len = 0;
    for_each_block([&](std::size_t off, std::size_t n) {
      if (open && start + len == off) {
        len += n;
        return;
      }
      if (open) fn(start, len);
      open = true;
      start = off;
      len = n;
    });
    if (open) fn(start, len);
  }

  // Visits the byte offset of every element, in payload order.
  template <class F>
  void for_each_element(F&& fn) const {
    const std::size_t eb = elem_bytes_;
    for_each_block([&](std::size_t off, std::size_t n) {
      for (std::size_t b = 0; b < n; b += eb) fn(off + b);
    });
  }

 private:
  Layout(Kind kind, std::size_t elem_bytes) : kind_(std::move(kind)), elem_bytes_(elem_bytes) {
    if (elem_bytes_ == 0) throw InvalidLayout("elem_bytes must be positive");
    using detail::checked_add;
    using detail::checked_mul;
    std::size_t payload_elems = 0;
    std::size_t extent_elems = 0;
    if (const auto* c = std::get_if<Contiguous>(&kind_)) {
      payload_elems = extent_elems = c->count;
    } else if (const auto* v = std::get_if<Vector>(&kind_)) {
      if (v->blocklen == 0) throw InvalidLayout("vector blocklen must be at least 1");
      if (v->stride < v->blocklen) throw InvalidLayout("vector stride must be >= blocklen");
      payload_elems = checked_mul(v->count, v->blocklen);
      if (v->count > 0) extent_elems = checked_add(checked_mul(v->count - 1, v->stride), v->blocklen);
    } else {
      const auto& blocks = std::get<Indexed>(kind_).blocks;
      std::size_t end = 0;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        if (b.blocklen == 0) throw InvalidLayout("indexed blocklen must be at least 1");
        if (i > 0 && b.displacement < end)
          throw InvalidLayout("indexed blocks must be increasing and non-overlapping");
        end = checked_add(b.displacement, b.blocklen);
        payload_elems = checked_add(payload_elems, b.blocklen);
      }
      extent_elems = end;
    }
    payload_bytes_ = checked_mul(payload_elems, elem_bytes_);
    extent_bytes_ = checked_mul(extent_elems, elem_bytes_);
  }

  Kind kind_;
  std::size_t elem_bytes_;
  std::size_t payload_bytes_ = 0;
  std::size_t extent_bytes_ = 0;
};

inline std::size_t payload_bytes(const Layout& l) noexcept { return l.payload_bytes(); }
inline std::size_t extent_bytes(const Layout& l) noexcept { return l.extent_bytes(); }

inline std::vector<Span> flatten(const Layout& l) {
  std::vector<Span> spans;
  l.for_each_span([&](std::size_t off, std::size_t len) { spans.push_back({off, len}); });
  return spans;
}

namespace detail {

template <std::size_t N>
inline void strided_copy_fixed(std::byte* out, const std::byte* in, std::size_t count,
                               std::size_t stride) {
  for (std::size_t i = 0; i < count; ++i, in += stride, out += N) std::memcpy(out, in, N);
}

template <std::size_t N>
inline void strided_scatter_fixed(std::byte* out, const std::byte* in, std::size_t count,
                                  std::size_t stride) {
  for (std::size_t i = 0; i < count; ++i, out += stride, in += N) std::memcpy(out, in, N);
}

// Copies count blocks of block bytes from a strided source into dense output.
inline void strided_gather(std::byte* out, const std::byte* in, std::size_t count,
                           std::size_t block, std::size_t stride) {
  switch (block) {
    case 4: return strided_copy_fixed<4>(out, in, count, stride);
    case 8: return strided_copy_fixed<8>(out, in, count, stride);
    case 16: return strided_copy_fixed<16>(out, in, count, stride);
    case 32: return strided_copy_fixed<32>(out, in, count, stride);
    default:
      for (std::size_t i = 0; i < count; ++i, in += stride, out += block)
        std::memcpy(out, in, block);
  }
}

inline void strided_scatter(std::byte* out, const std::byte* in, std::size_t count,
                            std::size_t block, std::size_t stride) {
  switch (block) {
    case 4: return strided_scatter_fixed<4>(out, in, count, stride);
    case 8: return strided_scatter_fixed<8>(out, in, count, stride);
    case 16: return strided_scatter_fixed<16>(out, in, count, stride);
    case 32: return strided_scatter_fixed<32>(out, in, count, stride);
    default:
      for (std::size_t i = 0; i < count; ++i, out += stride, in += block)
        std::memcpy(out, in, block);
  }
}

}  // namespace detail

// Packs the layout's payload from source into out[0, payload_bytes).
inline void gather(const Layout& l, std::span<const std::byte> source, std::span<std::byte> out) {
  if (source.size() < l.extent_bytes()) throw SourceTooSmall("gather source shorter than layout extent");
  if (out.size() < l.payload_bytes()) throw DestTooSmall("gather output shorter than layout payload");
  if (l.payload_bytes() == 0) return;
  if (const auto* v = std::get_if<Vector>(&l.kind()); v != nullptr && v->stride != v->blocklen) {
    detail::strided_gather(out.data(), source.data(), v->count, v->blocklen * l.elem_bytes(),
                           v->stride * l.elem_bytes());
    return;
  }
  std::byte* dst = out.data();
  l.for_each_span([&](std::size_t off, std::size_t len) {
    std::memcpy(dst, source.data() + off, len);
    dst += len;
  });
}

inline std::vector<std::byte> gather(const Layout& l, std::span<const std::byte> source) {
  if (source.size() < l.extent_bytes()) throw SourceTooSmall("gather source shorter than layout extent");
  std::vector<std::byte> out(l.payload_bytes());
  gather(l, source, out);
  return out;
}

// Inverse of gather: writes packed bytes back to the layout's positions in
// dest, leaving gap bytes untouched.
inline void scatter(const Layout& l, std::span<const std::byte> packed, std::span<std::byte> dest) {
  if (packed.size() != l.payload_bytes()) throw SizeMismatch("packed length differs from layout payload");
  if (dest.size() < l.extent_bytes()) throw DestTooSmall("scatter destination shorter than layout extent");
  if (packed.empty()) return;
  if (const auto* v = std::get_if<Vector>(&l.kind()); v != nullptr && v->stride != v->blocklen) {
    detail::strided_scatter(dest.data(), packed.data(), v->count, v->blocklen * l.elem_bytes(),
                            v->stride * l.elem_bytes());
    return;
  }
  const std::byte* src = packed.data();
  l.for_each_span([&](std::size_t off, std::size_t len) {
    std::memcpy(dest.data() + off, src, len);
    src += len;
  });
}

namespace detail {

inline std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t value = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw InvalidLayout("bad " + std::string(what) + " '" + std::string(s) + "'");
  return value;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace detail

// Parses `contig:COUNT`, `vector:COUNT:BLOCKLEN:STRIDE` or
// `indexed:D0xB0,D1xB1,...` (all in elements).
inline Layout parse_layout(std::string_view text, std::size_t elem_bytes = kDefaultElemBytes) {
  using detail::parse_count;
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidLayout("layout needs KIND:ARGS, got '" + std::string(text) + "'");
  std::string_view kind = text.substr(0, colon);
  std::string_view args = text.substr(colon + 1);
  if (kind == "contig" || kind == "contiguous") {
    return Layout::contiguous(parse_count(args, "count"), elem_bytes);
  }
  if (kind == "vector") {
    auto parts = detail::split(args, ':');
    if (parts.size() != 3) throw InvalidLayout("vector layout needs COUNT:BLOCKLEN:STRIDE");
    return Layout::vector(parse_count(parts[0], "count"), parse_count(parts[1], "blocklen"),
                          parse_count(parts[2], "stride"), elem_bytes);
  }
  if (kind == "indexed") {
    std::vector<Block> blocks;
    if (!args.empty()) {
      for (std::string_view item : detail::split(args, ',')) {
        auto x = item.find('x');
        if (x == std::string_view::npos) throw InvalidLayout("indexed block needs DISPxLEN, got '" + std::string(item) + "'");
        blocks.push_back({parse_count(item.substr(0, x), "displacement"),
                          parse_count(item.substr(x + 1), "blocklen")});
      }
    }
    return Layout::indexed(std::move(blocks), elem_bytes);
  }
  throw InvalidLayout("unknown layout kind '" + std::string(kind) + "'");
}

inline std::string to_string(const Layout& l) {
  if (const auto* c = std::get_if<Contiguous>(&l.kind())) return "contig:" + std::to_string(c->count);
  if (const auto* v = std::get_if<Vector>(&l.kind()))
    return "vector:" + std::to_string(v->count) + ":" + std::to_string(v->blocklen) + ":" +
           std::to_string(v->stride);
  std::string s = "indexed:";
  const auto& blocks = std::get<Indexed>(l.kind()).blocks;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(blocks[i].displacement) + "x" + std::to_string(blocks[i].blocklen);
  }
  return s;
}

}  // namespace ncxfer
