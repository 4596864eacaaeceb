#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "l4span/errors.hpp"
#include "l4span/marking.hpp"
#include "l4span/scenario.hpp"
#include "l4span/senders.hpp"
#include "l4span/simulator.hpp"

using namespace l4span;

namespace {

constexpr std::uint32_t kSmss = 1460;

AckSample sample(Seconds now, ByteCount acked, ByteCount ce, bool ce_event = false) {
  AckSample s;
  s.now = now;
  s.acked_bytes = acked;
  s.ce_bytes = ce;
  s.ce_event = ce_event || ce > 0;
  return s;
}

Packet data(std::uint32_t seq, EcnCodepoint ecn, std::uint8_t flags = tcp_flag::kAck) {
  Packet p;
  p.five_tuple = {1, 2, 443, 1000, Proto::Tcp};
  p.size_bytes = 1500;
  p.ecn = ecn;
  p.tcp = TcpFields{seq, 0, flags, std::nullopt};
  return p;
}

Packet syn(bool accecn, bool classic) {
  Packet p = data(0, EcnCodepoint::NotEct, tcp_flag::kSyn);
  p.size_bytes = kTcpHeaderFloor;
  if (accecn) p.tcp->accecn = AccEcnFields{};
  if (classic) p.tcp->flags |= tcp_flag::kEce | tcp_flag::kCwr;
  return p;
}

}  // namespace

TEST(Prague, OneFullCeRoundFromZeroAlpha) {
  PragueCc cc(kSmss, PragueCc::Params{1.0 / 16.0, 0.0});
  cc.force_phase(CcPhase::CongestionAvoidance);
  cc.set_cwnd(100.0 * kSmss);
  cc.set_srtt(0.1);
  for (int i = 0; i <= 10; ++i) cc.on_ack(sample(0.01 * i, kSmss, kSmss));
  EXPECT_NEAR(cc.alpha(), 0.0625, 1e-12);
  EXPECT_NEAR(cc.cwnd(), 0.96875 * 100.0 * kSmss, 1e-6);
  EXPECT_EQ(cc.cuts(), 1u);
}

TEST(Prague, FullAlphaHalvesWindow) {
  PragueCc cc(kSmss, PragueCc::Params{1.0 / 16.0, 1.0});
  cc.force_phase(CcPhase::CongestionAvoidance);
  cc.set_cwnd(80.0 * kSmss);
  cc.set_srtt(0.05);
  for (int i = 0; i <= 5; ++i) cc.on_ack(sample(0.01 * i, kSmss, kSmss));
  EXPECT_NEAR(cc.alpha(), 1.0, 1e-12);
  EXPECT_NEAR(cc.ssthresh(), 40.0 * kSmss, 1e-6);
  EXPECT_NEAR(cc.cwnd(), 40.0 * kSmss, 1e-6);
}

TEST(Prague, AlphaDecaysGeometrically) {
  PragueCc cc(kSmss);
  cc.force_phase(CcPhase::CongestionAvoidance);
  cc.set_srtt(0.01);
  Seconds t = 0.0;
  cc.on_ack(sample(t, kSmss, 0));  // opens the first round
  for (int round = 1; round <= 20; ++round) {
    t += 0.0125;  // every ACK closes a round
    cc.on_ack(sample(t, kSmss, 0));
    EXPECT_NEAR(cc.alpha(), std::pow(15.0 / 16.0, round), 1e-12);
  }
}

TEST(Prague, AdditiveIncreaseOnCleanAcks) {
  PragueCc cc(kSmss);
  cc.force_phase(CcPhase::CongestionAvoidance);
  cc.set_cwnd(10.0 * kSmss);
  cc.set_srtt(1.0);
  const double before = cc.cwnd();
  cc.on_ack(sample(0.0, 5 * kSmss, 0));
  EXPECT_NEAR(cc.cwnd(), before + kSmss * 5.0 * kSmss / before, 1e-9);
}

TEST(Reno, HalvesOnCe) {
  RenoCc cc(kSmss);
  cc.force_phase(CcPhase::CongestionAvoidance);
  cc.set_cwnd(100.0 * kSmss);
  cc.on_ack(sample(1.0, kSmss, 0, true));
  EXPECT_NEAR(cc.cwnd(), 50.0 * kSmss, 1e-9);
  EXPECT_NEAR(cc.ssthresh(), 50.0 * kSmss, 1e-9);
}

TEST(Reno, SlowStartDoublesPerRound) {
  RenoCc cc(kSmss);
  const double w0 = cc.cwnd();
  for (int i = 0; i < 10; ++i) cc.on_ack(sample(0.001 * i, kSmss, 0));
  EXPECT_NEAR(cc.cwnd(), 2.0 * w0, 1e-9);
  // app-limited acks do not grow the window
  AckSample idle = sample(0.02, kSmss, 0);
  idle.cwnd_limited = false;
  cc.on_ack(idle);
  EXPECT_NEAR(cc.cwnd(), 2.0 * w0, 1e-9);
}

TEST(Cubic, CurveAfterCut) {
  CubicCc::Params p;
  p.tcp_friendly = false;
  CubicCc cc(kSmss, p);
  cc.set_cwnd(100.0 * kSmss);
  cc.set_srtt(0.05);
  cc.on_ack(sample(0.0, kSmss, 0, true));
  EXPECT_NEAR(cc.cwnd(), 70.0 * kSmss, 1e-9);
  EXPECT_NEAR(cc.w_max(), 100.0 * kSmss, 1e-9);
  const double k_oracle = std::cbrt(100.0 * (1.0 - 0.7) / 0.4);
  EXPECT_NEAR(cc.k(), k_oracle, 1e-12);
  EXPECT_NEAR(cc.cubic_window(k_oracle), 100.0 * kSmss, 1e-6);
  const double w10 = (0.4 * std::pow(10.0 - k_oracle, 3) + 100.0) * kSmss;
  EXPECT_NEAR(cc.cubic_window(10.0), w10, 1e-6);
}

TEST(Cubic, GrowsTowardsPlateau) {
  CubicCc::Params p;
  p.tcp_friendly = false;
  p.hystart = false;
  CubicCc cc(kSmss, p);
  cc.set_cwnd(100.0 * kSmss);
  cc.set_srtt(0.05);
  cc.on_ack(sample(0.0, kSmss, 0, true));
  Seconds t = 0.0;
  double prev = cc.cwnd();
  while (t < cc.k()) {
    t += 0.001;
    cc.on_ack(sample(t, kSmss, 0));
    ASSERT_GE(cc.cwnd(), prev - 1e-9);
    prev = cc.cwnd();
  }
  EXPECT_NEAR(cc.cwnd(), 100.0 * kSmss, 3.0 * kSmss);
}

TEST(Cubic, ParameterValidation) {
  CubicCc::Params p;
  p.beta = 1.0;
  EXPECT_THROW(CubicCc(kSmss, p), DomainError);
  EXPECT_THROW(PragueCc(kSmss, PragueCc::Params{0.0, 1.0}), DomainError);
}

TEST(CongestionControl, OneCutPerRttAndFloorUnderRandomFeedback) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> coin(0, 9);
  std::uniform_real_distribution<double> gap(1e-4, 5e-3);
  for (auto kind : {CcKind::Prague, CcKind::Cubic, CcKind::Reno}) {
    auto cc = make_cc(kind, kSmss);
    const Seconds srtt = 0.04;
    cc->set_srtt(srtt);
    Seconds t = 0.0;
    std::uint64_t cuts = 0;
    std::optional<Seconds> last;
    for (int i = 0; i < 50000; ++i) {
      t += gap(rng);
      const int c = coin(rng);
      AckSample s = sample(t, kSmss, c < 3 ? kSmss : 0, c < 3);
      s.loss = c == 9;
      cc->on_ack(s);
      if (cc->cuts() != cuts) {
        if (last) {
          ASSERT_GE(t - *last, srtt - 1e-12) << to_string(kind);
        }
        last = t;
        cuts = cc->cuts();
      }
      ASSERT_GE(cc->cwnd(), 2.0 * kSmss - 1e-9) << to_string(kind);
      ASSERT_GE(cc->ssthresh(), 2.0 * kSmss - 1e-9) << to_string(kind);
    }
    EXPECT_GT(cuts, 10u);
  }
}

TEST(CongestionControl, RtoResetsToFloor) {
  auto cc = make_cc(CcKind::Cubic, kSmss);
  cc->on_rto(1.0);
  EXPECT_EQ(cc->cwnd(), 2.0 * kSmss);
  EXPECT_EQ(cc->phase(), CcPhase::SlowStart);
}

TEST(Receiver, ClassicEchoesCeUntilCwr) {
  TcpReceiver r;
  const auto sa = r.on_segment(syn(false, true), 1, 0.0);
  EXPECT_EQ(r.mode(), EcnFeedback::Classic);
  EXPECT_TRUE(sa.tcp->has(tcp_flag::kSyn));
  EXPECT_TRUE(sa.tcp->has(tcp_flag::kEce));
  EXPECT_FALSE(r.on_segment(data(0, EcnCodepoint::Ect0), 2, 0.1).tcp->has(tcp_flag::kEce));
  EXPECT_TRUE(r.on_segment(data(1460, EcnCodepoint::Ce), 3, 0.2).tcp->has(tcp_flag::kEce));
  EXPECT_TRUE(r.on_segment(data(2920, EcnCodepoint::Ect0), 4, 0.3).tcp->has(tcp_flag::kEce));
  const auto cwr = data(4380, EcnCodepoint::Ect0, tcp_flag::kAck | tcp_flag::kCwr);
  EXPECT_FALSE(r.on_segment(cwr, 5, 0.4).tcp->has(tcp_flag::kEce));
}

TEST(Receiver, AccEcnCounters) {
  TcpReceiver r;
  const auto sa = r.on_segment(syn(true, false), 1, 0.0);
  EXPECT_EQ(r.mode(), EcnFeedback::AccEcn);
  EXPECT_TRUE(sa.tcp->accecn);
  auto a = r.on_segment(data(0, EcnCodepoint::Ect1), 2, 0.1);
  EXPECT_EQ(a.tcp->accecn->ect1_bytes, 1460u);
  EXPECT_FALSE(a.tcp->has(tcp_flag::kEce));
  for (std::uint32_t i = 1; i <= 3; ++i) {
    a = r.on_segment(data(1460 * i, EcnCodepoint::Ce), 2 + i, 0.1 + i);
  }
  EXPECT_EQ(a.tcp->accecn->ace_counter, 3);
  EXPECT_EQ(a.tcp->accecn->ce_bytes, 3u * 1460u);
}

TEST(Receiver, CumulativeAckWithReordering) {
  TcpReceiver r;
  r.on_segment(syn(false, false), 1, 0.0);
  EXPECT_EQ(r.mode(), EcnFeedback::None);
  EXPECT_EQ(r.on_segment(data(1460, EcnCodepoint::NotEct), 2, 0.1).tcp->ack_no, 0u);
  EXPECT_EQ(r.on_segment(data(0, EcnCodepoint::NotEct), 3, 0.2).tcp->ack_no, 2920u);
  EXPECT_EQ(r.delivered_bytes(), 2920u);
  Packet bare;
  EXPECT_THROW(r.on_segment(bare, 4, 0.3), ProtocolError);
}

TEST(TcpSender, HandshakeAndEcnCodepoints) {
  TcpSenderConfig cfg;
  cfg.cc = CcKind::Cubic;
  cfg.feedback = EcnFeedback::Classic;
  TcpSender s(cfg);
  const auto first = s.start(0.0);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_TRUE(first[0].tcp->has(tcp_flag::kSyn));
  EXPECT_TRUE(first[0].tcp->has(tcp_flag::kEce));
  EXPECT_TRUE(first[0].tcp->has(tcp_flag::kCwr));

  TcpReceiver r;
  const auto syn_ack = r.on_segment(first[0], 1, 0.01);
  const auto burst = s.on_ack(syn_ack, 0.02);
  EXPECT_TRUE(s.established());
  ASSERT_FALSE(burst.empty());
  for (const auto& p : burst) EXPECT_EQ(p.ecn, EcnCodepoint::Ect0);

  TcpSenderConfig pc;
  pc.cc = CcKind::Prague;
  TcpSender prague(pc);
  const auto psyn = prague.start(0.0);
  EXPECT_TRUE(psyn[0].tcp->accecn);
}

TEST(TcpSender, ReliableTransferOverLossyLoop) {
  // in-process loop: every 7th data segment vanishes on its first attempt
  TcpSenderConfig cfg;
  cfg.cc = CcKind::Reno;
  cfg.feedback = EcnFeedback::None;
  cfg.size_bytes = 200 * 1460;
  cfg.pacing = false;
  TcpSender s(cfg);
  TcpReceiver r;
  struct InFlight {
    Seconds at;
    Packet p;
  };
  std::vector<InFlight> wire;
  Seconds now = 0.0;
  std::uint64_t id = 0, n = 0;
  auto emit = [&](std::vector<Packet> pkts) {
    for (auto& p : pkts) {
      const bool drop = p.payload_bytes() > 0 && !p.trace.retransmission && (++n % 7 == 0);
      if (!drop) wire.push_back({now + 0.02, std::move(p)});
    }
  };
  emit(s.start(now));
  for (int guard = 0; guard < 200000 && !s.finished(); ++guard) {
    Seconds next = 1e9;
    for (const auto& w : wire) next = std::min(next, w.at);
    if (auto t = s.next_timer()) next = std::min(next, *t);
    ASSERT_LT(next, 1e9);
    now = next;
    std::vector<InFlight> due, rest;
    for (auto& w : wire) (w.at <= now ? due : rest).push_back(std::move(w));
    wire = std::move(rest);
    for (auto& w : due) {
      if (w.p.direction == Direction::Downlink) {
        wire.push_back({now + 0.02, r.on_segment(w.p, ++id, now)});
      } else {
        emit(s.on_ack(w.p, now));
      }
    }
    if (auto t = s.next_timer(); t && *t <= now) emit(s.on_timer(now));
  }
  EXPECT_TRUE(s.finished());
  EXPECT_EQ(r.delivered_bytes(), 200u * 1460u);
  EXPECT_GT(s.retransmissions(), 0u);
}

TEST(Udp, CbrRate) {
  UdpSenderConfig cfg;
  cfg.rate = 1e6;
  cfg.packet_bytes = 1000;
  cfg.stop = 1.0;
  UdpSender u(cfg);
  ByteCount sent = 0;
  for (auto t = u.next_timer(); t && *t < 1.0; t = u.next_timer()) {
    for (const auto& p : u.on_timer(*t)) sent += p.size_bytes;
  }
  EXPECT_NEAR(static_cast<double>(sent), 1e6, 2000.0);
}

// Reno behind a constant Bernoulli marker should track the response
// function the classic marking rule inverts.
class RenoModel : public ::testing::TestWithParam<double> {};

TEST_P(RenoModel, ThroughputWithinQuarterOfModel) {
  const double p = GetParam();
  std::ostringstream js;
  js << R"({"name":"reno-bernoulli","horizon_secs":60,"seed":3,
            "aqm":{"kind":"bernoulli","probability":)" << p << R"(},
            "ues":[{"ue_id":1,"channel":{"type":"static","mbps":300}}],
            "flows":[{"ue":1,"sender":"reno","feedback":"classic"}],
            "metrics":{"steady_state_secs":10,"packet_records":false}})";
  const auto res = run_scenario(parse_scenario(js.str(), "inline"));
  ASSERT_EQ(res.summary.flows.size(), 1u);
  const auto& f = res.summary.flows[0];
  const double rtt = f.rtt_ms.p50 / 1e3;
  const double model = kSmss * k_constant(0.5) / (rtt * std::sqrt(p));
  const double got = f.throughput_mbps * 1e6 / 8.0;
  EXPECT_NEAR(got / model, 1.0, 0.25) << "p=" << p << " got " << got << " model " << model;
}

INSTANTIATE_TEST_SUITE_P(Probabilities, RenoModel, ::testing::Values(1e-3, 1e-4, 1e-5));
