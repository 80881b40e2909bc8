#include <gtest/gtest.h>

#include <thread>

#include "ncxfer/measure.hpp"
#include "ncxfer/model.hpp"
#include "ncxfer/schemes.hpp"
#include "ncxfer/testing/oracle.hpp"
#include "ncxfer/transport.hpp"

using namespace ncxfer;

namespace {

MeasureConfig quick(Backend b) {
  MeasureConfig mc;
  mc.reps = 2;
  mc.warmup_reps = 0;
  mc.flush_bytes = 0;
  mc.clock = b == Backend::Modeled ? ClockKind::Virtual : ClockKind::Wall;
  return mc;
}

std::vector<std::byte> expected_payload(const Layout& l) {
  std::vector<std::byte> src(l.extent_bytes());
  fill_pattern(src);
  return oracle::oracle_gather(l, src);
}

}  // namespace

TEST(SchemeNames, CliAndLegend) {
  EXPECT_EQ(cli_name(SchemeId::PackElement), "packing-e");
  EXPECT_EQ(legend_label(SchemeId::PackElement), "packing(e)");
  EXPECT_EQ(legend_label(SchemeId::PackVector), "packing(v)");
  for (SchemeId s : kAllSchemes) EXPECT_EQ(parse_scheme(cli_name(s)), s);
  EXPECT_FALSE(parse_scheme("nope").has_value());
}

TEST(FillPattern, PrimePeriod) {
  std::vector<std::byte> v(600);
  fill_pattern(v);
  EXPECT_EQ(v[250], std::byte{250});
  EXPECT_EQ(v[251], std::byte{0});
  EXPECT_EQ(v[503], std::byte{1});
}

TEST(Delivery, AllSchemesDeliverOracleBytes) {
  const Layout l = Layout::vector(4, 1, 2, 8);
  const auto want = expected_payload(l);
  for (Backend b : {Backend::InProc, Backend::Modeled, Backend::Tcp}) {
    Pair pair = connect(b, {});
    PingPongBench bench(pair, quick(b));
    for (SchemeId s : kAllSchemes) {
      ReceiverContext got;
      bench.run(s, l, &got);
      const auto bytes = got.received();
      EXPECT_EQ(std::vector<std::byte>(bytes.begin(), bytes.end()), want)
          << cli_name(s) << " on " << backend_name(b);
    }
  }
}

TEST(Delivery, LargeStridedAcrossRendezvous) {
  const Layout l = Layout::vector(300'000, 1, 2, 8);  // 2.4 MB payload
  const auto want = expected_payload(l);
  Pair pair = connect(Backend::InProc, {});
  PingPongBench bench(pair, quick(Backend::InProc));
  for (SchemeId s : kAllSchemes) {
    ReceiverContext got;
    bench.run(s, l, &got);
    const auto bytes = got.received();
    ASSERT_EQ(bytes.size(), want.size());
    EXPECT_TRUE(std::equal(bytes.begin(), bytes.end(), want.begin())) << cli_name(s);
  }
}

TEST(Delivery, EmptyLayoutDeliversEmptyMessage) {
  const Layout l = Layout::contiguous(0);
  for (Backend b : {Backend::InProc, Backend::Modeled}) {
    Pair pair = connect(b, {});
    PingPongBench bench(pair, quick(b));
    for (SchemeId s : kAllSchemes) {
      ReceiverContext got;
      bench.run(s, l, &got);
      EXPECT_EQ(got.received().size(), 0u) << cli_name(s);
    }
  }
}

TEST(Prepare, ContextShapes) {
  Pair pair = connect(Backend::InProc, {});
  const Layout l = Layout::vector(16, 1, 2, 8);

  SenderContext c = prepare(SchemeId::Contiguous, l, *pair.a);
  EXPECT_EQ(c.send_bytes().data(), c.source().data());
  EXPECT_EQ(c.source().size(), l.payload_bytes());

  SenderContext bs = prepare(SchemeId::BufferedSend, l, *pair.a);
  EXPECT_GE(bs.attached_bytes, l.payload_bytes() + kBsendOverheadBytes);

  SenderContext mc = prepare(SchemeId::ManualCopy, l, *pair.a);
  EXPECT_EQ(reinterpret_cast<std::uintptr_t>(mc.send_buffer.data()) % kBufferAlignment, 0u);
  EXPECT_EQ(reinterpret_cast<std::uintptr_t>(mc.source_region.data()) % kBufferAlignment, 0u);
  for (std::byte b : mc.send_buffer.span()) ASSERT_EQ(b, std::byte{0});

  SenderContext os;
  ReceiverContext orx;
  std::jthread t([&] { orx = prepare_receiver(SchemeId::OneSidedPut, l, *pair.b); });
  os = prepare(SchemeId::OneSidedPut, l, *pair.a);
  t.join();
  ASSERT_TRUE(os.window.valid());
  EXPECT_EQ(os.window.target_size(), l.payload_bytes());
  EXPECT_EQ(orx.window.size_bytes(), l.payload_bytes());
}

TEST(Pong, OneSidedUsesTwoFencesAndNoPong) {
  Pair pair = connect(Backend::InProc, {});
  const Layout l = Layout::vector(8, 1, 2, 8);
  SenderContext ctx;
  ReceiverContext rx;
  std::jthread t([&] {
    rx = prepare_receiver(SchemeId::OneSidedPut, l, *pair.b);
    catch_ping(rx, *pair.b);
    pong(SchemeId::OneSidedPut, *pair.b);
  });
  ctx = prepare(SchemeId::OneSidedPut, l, *pair.a);
  ping(ctx, *pair.a);
  await_pong(SchemeId::OneSidedPut, *pair.a);
  t.join();
  EXPECT_EQ(ctx.window.fence_count(), 2u);
  EXPECT_EQ(rx.window.fence_count(), 2u);
  EXPECT_EQ(pair.b->stats().messages_sent, 0u);
}

TEST(Pong, TwoSidedReturnsZeroBytes) {
  Pair pair = connect(Backend::InProc, {});
  pong(SchemeId::ManualCopy, *pair.b);
  std::byte buf[1];
  EXPECT_EQ(pair.a->recv(buf), 0u);
}

TEST(Pong, AwaitWithoutPeerFails) {
  Pair pair = connect(Backend::InProc, {});
  pair.b->close();
  EXPECT_THROW(await_pong(SchemeId::ManualCopy, *pair.a), PeerClosed);
}

TEST(Pong, NonEmptyPongIsProtocolError) {
  Pair pair = connect(Backend::InProc, {});
  const std::byte b{1};
  pair.b->send({&b, 1});
  EXPECT_THROW(await_pong(SchemeId::ManualCopy, *pair.a), ProtocolError);
}

TEST(Packing, VectorAndManualCopyBuffersIdentical) {
  Pair pair = connect(Backend::InProc, {});
  const Layout l = Layout::indexed({{1, 2}, {5, 1}, {9, 4}}, 8);
  SenderContext manual = prepare(SchemeId::ManualCopy, l, *pair.a);
  SenderContext packv = prepare(SchemeId::PackVector, l, *pair.a);
  SenderContext packe = prepare(SchemeId::PackElement, l, *pair.a);
  std::jthread t([&] {
    for (int i = 0; i < 3; ++i) pair.b->recv_vector(l.payload_bytes());
  });
  ping(manual, *pair.a);
  ping(packv, *pair.a);
  ping(packe, *pair.a);
  t.join();
  auto a = manual.send_bytes();
  auto v = packv.send_bytes();
  auto e = packe.send_bytes();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), v.begin(), v.end()));
  EXPECT_TRUE(std::equal(a.begin(), a.end(), e.begin(), e.end()));
}

TEST(Packing, PositionAdvancesAndOverflowIsRejected) {
  Pair pair = connect(Backend::InProc, {});
  std::vector<std::byte> src(32), out(16);
  const Layout one = Layout::contiguous(1, 8);
  std::size_t pos = pair.a->pack(one, src, out, 0);
  EXPECT_EQ(pos, 8u);
  pos = pair.a->pack(one, src, out, pos);
  EXPECT_EQ(pos, 16u);
  EXPECT_THROW(pair.a->pack(one, src, out, pos), DestTooSmall);
}

TEST(ModeledSchemes, PackElementPaysPerCall) {
  TransportConfig cfg;
  const std::size_t count = 50'000;
  const Layout l = Layout::vector(count, 1, 2, 8);
  Pair pair = connect(Backend::Modeled, cfg);
  PingPongBench bench(pair, quick(Backend::Modeled));
  const double elem = bench.run(SchemeId::PackElement, l).mean_s;
  const double manual = bench.run(SchemeId::ManualCopy, l).mean_s;
  EXPECT_NEAR(elem - manual, static_cast<double>(count) * cfg.model.per_call_s, 1e-12);
}

TEST(ModeledSchemes, MatchClosedFormPredictions) {
  for (bool offload : {false, true}) {
    TransportConfig cfg;
    cfg.model.nic_offload = offload;
    Pair pair = connect(Backend::Modeled, cfg);
    PingPongBench bench(pair, quick(Backend::Modeled));
    for (std::size_t count : {0, 1, 100, 8192, 8193, 200'000, 5'000'000}) {
      const Layout l = Layout::vector(count, 1, 2, 8);
      for (SchemeId s : kAllSchemes) {
        const double got = bench.run(s, l).mean_s;
        const double want = predict_time(s, l.payload_bytes(), cfg);
        EXPECT_LE(std::abs(got - want), 1e-12 * want)
            << cli_name(s) << " n=" << l.payload_bytes() << " offload=" << offload;
      }
    }
  }
}
