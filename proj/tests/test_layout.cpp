#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <vector>

#include "ncxfer/layout.hpp"
#include "ncxfer/testing/oracle.hpp"

using namespace ncxfer;

namespace {

std::vector<std::byte> offset_bytes(std::size_t n) {
  std::vector<std::byte> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::byte>(i);
  return v;
}

}  // namespace

TEST(LayoutSizes, PayloadBytes) {
  EXPECT_EQ(payload_bytes(Layout::vector(3, 2, 4, 8)), 48u);
  EXPECT_EQ(payload_bytes(Layout::contiguous(5, 8)), 40u);
  EXPECT_EQ(payload_bytes(Layout::indexed({{0, 1}, {10, 3}}, 4)), 16u);
}

TEST(LayoutSizes, ExtentBytes) {
  EXPECT_EQ(extent_bytes(Layout::vector(3, 2, 4, 8)), 80u);
  EXPECT_EQ(extent_bytes(Layout::contiguous(5, 8)), 40u);
  EXPECT_EQ(extent_bytes(Layout::indexed({{0, 1}, {10, 3}}, 4)), 52u);
}

TEST(LayoutSizes, DefaultElementIsEightBytes) { EXPECT_EQ(Layout::contiguous(3).payload_bytes(), 24u); }

TEST(LayoutValidation, RejectsBadShapes) {
  EXPECT_THROW(Layout::vector(2, 3, 2), InvalidLayout);
  EXPECT_THROW(Layout::vector(2, 0, 2), InvalidLayout);
  EXPECT_THROW(Layout::contiguous(2, 0), InvalidLayout);
  EXPECT_THROW(Layout::indexed({{4, 2}, {5, 1}}), InvalidLayout);
  EXPECT_THROW(Layout::indexed({{4, 2}, {0, 1}}), InvalidLayout);
  EXPECT_THROW(Layout::indexed({{0, 0}}), InvalidLayout);
  EXPECT_THROW(Layout::vector(SIZE_MAX / 2, 4, 4), InvalidLayout);
}

TEST(Flatten, VectorBlocksStaySeparate) {
  std::vector<Span> want{{0, 16}, {32, 16}, {64, 16}};
  EXPECT_EQ(flatten(Layout::vector(3, 2, 4, 8)), want);
  EXPECT_EQ(oracle::oracle_spans(Layout::vector(3, 2, 4, 8)), want);
}

TEST(Flatten, DenseVectorCollapses) {
  std::vector<Span> want{{0, 64}};
  EXPECT_EQ(flatten(Layout::vector(4, 2, 2, 8)), want);
  EXPECT_EQ(flatten(Layout::contiguous(5, 8)), (std::vector<Span>{{0, 40}}));
}

TEST(Flatten, AdjacentIndexedBlocksMerge) {
  auto l = Layout::indexed({{0, 1}, {1, 2}, {5, 1}}, 4);
  EXPECT_EQ(flatten(l), (std::vector<Span>{{0, 12}, {20, 4}}));
}

TEST(Flatten, EmptyLayouts) {
  EXPECT_TRUE(flatten(Layout::vector(0, 1, 1)).empty());
  EXPECT_TRUE(flatten(Layout::contiguous(0)).empty());
  EXPECT_TRUE(flatten(Layout::indexed({})).empty());
}

TEST(Gather, ContiguousIsPrefix) {
  auto src = offset_bytes(100);
  auto out = gather(Layout::contiguous(5, 8), src);
  EXPECT_EQ(out, std::vector<std::byte>(src.begin(), src.begin() + 40));
}

TEST(Gather, VectorPicksBlocks) {
  auto src = offset_bytes(80);
  auto out = gather(Layout::vector(3, 2, 4, 8), src);
  std::vector<std::byte> want;
  for (std::size_t start : {0, 32, 64})
    for (std::size_t i = start; i < start + 16; ++i) want.push_back(static_cast<std::byte>(i));
  EXPECT_EQ(out, want);
}

TEST(Gather, EmptyVector) { EXPECT_TRUE(gather(Layout::vector(0, 1, 1), {}).empty()); }

TEST(Gather, SourceTooSmall) {
  auto src = offset_bytes(79);
  EXPECT_THROW(gather(Layout::vector(3, 2, 4, 8), src), SourceTooSmall);
}

TEST(Scatter, RoundTripLeavesGapsAlone) {
  auto l = Layout::vector(3, 2, 4, 8);
  auto src = offset_bytes(80);
  std::vector<std::byte> dest(80, std::byte{0xEE});
  scatter(l, gather(l, src), dest);
  for (const Span& s : oracle::oracle_spans(l))
    for (std::size_t i = s.offset_bytes; i < s.offset_bytes + s.len_bytes; ++i) EXPECT_EQ(dest[i], src[i]);
  for (std::size_t i : {16, 31, 48, 63}) EXPECT_EQ(dest[i], std::byte{0xEE});
}

TEST(Scatter, ContiguousIdentity) {
  auto l = Layout::contiguous(5, 8);
  auto src = offset_bytes(40);
  std::vector<std::byte> dest(40);
  scatter(l, gather(l, src), dest);
  EXPECT_EQ(dest, src);
}

TEST(Scatter, Errors) {
  auto l = Layout::vector(3, 2, 4, 8);
  std::vector<std::byte> dest(80);
  std::vector<std::byte> short_packed(47);
  EXPECT_THROW(scatter(l, short_packed, dest), SizeMismatch);
  std::vector<std::byte> packed(48);
  std::vector<std::byte> small(79);
  EXPECT_THROW(scatter(l, packed, small), DestTooSmall);
}

TEST(LayoutProperties, RandomLayoutsMatchOracle) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    const Layout l = oracle::random_layout(rng);
    SCOPED_TRACE(to_string(l) + " elem " + std::to_string(l.elem_bytes()));
    std::vector<std::byte> src(l.extent_bytes());
    for (auto& b : src) b = static_cast<std::byte>(rng());

    const auto spans = flatten(l);
    ASSERT_EQ(spans, oracle::oracle_spans(l));
    std::size_t total = 0;
    std::size_t end = 0;
    for (const Span& s : spans) {
      total += s.len_bytes;
      end = std::max(end, s.offset_bytes + s.len_bytes);
    }
    EXPECT_EQ(total, l.payload_bytes());
    EXPECT_EQ(end, l.extent_bytes());

    const auto packed = gather(l, src);
    ASSERT_EQ(packed, oracle::oracle_gather(l, src));

    std::vector<std::byte> restored(l.extent_bytes(), std::byte{0});
    scatter(l, packed, restored);
    EXPECT_EQ(gather(l, restored), packed);
    for (std::size_t off : oracle::element_offsets(l))
      for (std::size_t b = 0; b < l.elem_bytes(); ++b) ASSERT_EQ(restored[off + b], src[off + b]);
  }
}

TEST(LayoutProperties, UnitStrideVectorIsOneSpan) {
  for (std::size_t c : {1, 3, 17})
    for (std::size_t b : {1, 2, 5}) {
      auto spans = flatten(Layout::vector(c, b, b, 4));
      ASSERT_EQ(spans.size(), 1u);
      EXPECT_EQ(spans[0].len_bytes, c * b * 4);
    }
}

TEST(LayoutText, ParsesAllForms) {
  EXPECT_EQ(parse_layout("contig:5").payload_bytes(), 40u);
  EXPECT_EQ(parse_layout("vector:3:2:4", 4).extent_bytes(), 40u);
  auto ix = parse_layout("indexed:0x1,10x3", 4);
  EXPECT_EQ(ix.payload_bytes(), 16u);
  EXPECT_EQ(ix.extent_bytes(), 52u);
  EXPECT_EQ(to_string(ix), "indexed:0x1,10x3");
  EXPECT_EQ(to_string(parse_layout("vector:3:2:4")), "vector:3:2:4");
}

TEST(LayoutText, RejectsGarbage) {
  EXPECT_THROW(parse_layout("vector:3:2"), InvalidLayout);
  EXPECT_THROW(parse_layout("contig:-1"), InvalidLayout);
  EXPECT_THROW(parse_layout("blob:3"), InvalidLayout);
  EXPECT_THROW(parse_layout("indexed:3"), InvalidLayout);
  EXPECT_THROW(parse_layout("vector:3:4:2"), InvalidLayout);
}
