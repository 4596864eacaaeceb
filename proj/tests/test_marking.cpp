#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "l4span/errors.hpp"
#include "l4span/marking.hpp"

using namespace l4span;

namespace {

Packet pkt(std::uint16_t port, EcnCodepoint ecn, std::uint32_t size = 1500,
           std::uint8_t flags = tcp_flag::kAck) {
  Packet p;
  p.five_tuple = {1, 2, 443, port, Proto::Tcp};
  p.size_bytes = size;
  p.ecn = ecn;
  p.tcp = TcpFields{0, 0, flags, std::nullopt};
  return p;
}

EgressEstimate estimate(double r_hat, double e_hat, ByteCount n_queue, Seconds at) {
  EgressEstimate e;
  e.r_hat = r_hat;
  e.e_hat = e_hat;
  e.n_queue = n_queue;
  e.sojourn_hat = predict_sojourn(n_queue, r_hat);
  e.at = at;
  e.sample_count = 10;
  return e;
}

}  // namespace

TEST(MarkParams, Validation) {
  MarkParams p;
  EXPECT_NO_THROW(p.validate());
  p.beta = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p.beta = 0.5;
  p.tau_thr = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(DrbMarkState, RttStarFromHandshake) {
  DrbMarkState s(MarkParams{});
  const auto syn = pkt(1000, EcnCodepoint::NotEct, 40, tcp_flag::kSyn);
  s.observe_downlink(syn, FlowClass::NonEcn, 1.000);
  s.observe_downlink(pkt(1000, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 1.040);
  ASSERT_TRUE(s.rtt_star(syn.five_tuple));
  EXPECT_NEAR(*s.rtt_star(syn.five_tuple), 0.040, 1e-12);
  EXPECT_NEAR(*s.rtt_estimate(syn.five_tuple, 0.010), 0.050, 1e-12);
  EXPECT_NEAR(*s.rtt_estimate(syn.five_tuple, 0.0), 0.040, 1e-12);

  // no handshake seen: twice the sojourn, or nothing
  const FiveTuple udp{1, 2, 5000, 6000, Proto::Udp};
  EXPECT_NEAR(*s.rtt_estimate(udp, 0.015), 0.030, 1e-12);
  EXPECT_FALSE(s.rtt_estimate(udp, 0.0));
}

TEST(DrbMarkState, ModeFollowsFlowMix) {
  DrbMarkState s(MarkParams{});
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 0.0);
  EXPECT_EQ(s.mode(), DrbMode::L4sOnly);
  s.observe_downlink(pkt(2, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 0.0);
  EXPECT_EQ(s.mode(), DrbMode::Shared);
  // latest packet wins: flow 1 turns classic
  s.observe_downlink(pkt(1, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 0.0);
  EXPECT_EQ(s.mode(), DrbMode::ClassicOnly);
}

TEST(DrbMarkState, IdleFlowsAreForgotten) {
  MarkingOptions o;
  o.flow_idle_timeout = 10.0;
  DrbMarkState s(MarkParams{}, o);
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 0.0);
  s.observe_downlink(pkt(2, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 0.0);
  EXPECT_EQ(s.mode(), DrbMode::Shared);
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 12.0);
  s.refresh(estimate(1e6, 0, 0, 12.0), 12.0);
  EXPECT_EQ(s.active_flows(), 1u);
  EXPECT_EQ(s.mode(), DrbMode::L4sOnly);
}

TEST(DrbMarkState, RefreshComputesEveryProbability) {
  DrbMarkState s(MarkParams{});
  const auto syn = pkt(7, EcnCodepoint::NotEct, 40, tcp_flag::kSyn);
  s.observe_downlink(syn, FlowClass::NonEcn, 0.0);
  s.observe_downlink(pkt(7, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 0.040);
  const auto est = estimate(5e6, 1e6, 50000, 0.05);
  s.refresh(est, 0.05);
  const double k = k_constant(0.5);
  const double rtt = 0.040 + 0.010;
  EXPECT_NEAR(s.p_classic(), std::pow(1500.0 * k / (rtt * 5e6), 2), 1e-15);
  EXPECT_NEAR(s.p_l4s(), p_l4s(50000, 5e6, 1e6, 0.010), 1e-15);
  EXPECT_NEAR(s.p_l4s_coupled(), (2.0 / k) * std::sqrt(s.p_classic()), 1e-12);
  EXPECT_NEAR(s.n_l(), 5e6 * 0.010, 1e-9);
  EXPECT_EQ(s.probability_for(FlowClass::ClassicEcn), s.p_classic());
}

TEST(DrbMarkState, ByteWeightedRttAcrossClassicFlows) {
  DrbMarkState s(MarkParams{});
  auto open = [&](std::uint16_t port, Seconds t0, Seconds rtt, int pkts) {
    s.observe_downlink(pkt(port, EcnCodepoint::NotEct, 40, tcp_flag::kSyn),
                       FlowClass::NonEcn, t0);
    for (int i = 0; i < pkts; ++i) {
      s.observe_downlink(pkt(port, EcnCodepoint::Ect0), FlowClass::ClassicEcn,
                         t0 + rtt);
    }
  };
  open(1, 0.0, 0.020, 1);
  open(2, 0.0, 0.060, 3);
  EXPECT_NEAR(*s.drb_rtt_estimate(0.0), (0.020 + 3 * 0.060) / 4, 1e-12);
}

TEST(DecideMark, StepBelowThresholdNeverMarks) {
  MarkingOptions o;
  o.force_zero_error = true;
  DrbMarkState s(MarkParams{}, o);
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 0.0);
  s.refresh(estimate(10e6, 3e6, 50000, 0.0), 0.0);  // 5 ms
  MarkRng rng(1);
  for (int i = 0; i < 10000; ++i) {
    ASSERT_EQ(decide_mark(s, pkt(1, EcnCodepoint::Ect1), FlowClass::L4S,
                          MarkRoute{true, false}, rng, 0.001),
              MarkDecision::Pass);
  }
}

TEST(DecideMark, CertainClassicMarkMapsByRoute) {
  DrbMarkState s(MarkParams{});
  s.observe_downlink(pkt(1, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 0.0);
  s.observe_downlink(pkt(2, EcnCodepoint::NotEct), FlowClass::NonEcn, 0.0);
  // tiny rate with a standing queue: (mss K / (rtt r))^2 >= 1
  s.refresh(estimate(100.0, 0.0, 150, 0.0), 0.0);
  ASSERT_EQ(s.mode(), DrbMode::ClassicOnly);
  ASSERT_EQ(s.p_classic(), 1.0);
  MarkRng rng(2);
  const auto ecn = pkt(1, EcnCodepoint::Ect0), plain = pkt(2, EcnCodepoint::NotEct);
  EXPECT_EQ(decide_mark(s, ecn, FlowClass::ClassicEcn, {false, false}, rng, 0.0),
            MarkDecision::MarkCe);
  EXPECT_EQ(decide_mark(s, ecn, FlowClass::ClassicEcn, {true, false}, rng, 0.0),
            MarkDecision::TentativeMark);
  EXPECT_EQ(decide_mark(s, plain, FlowClass::NonEcn, {false, true}, rng, 0.0),
            MarkDecision::Drop);
  EXPECT_EQ(decide_mark(s, plain, FlowClass::NonEcn, {false, false}, rng, 0.0),
            MarkDecision::Pass);
}

TEST(DecideMark, StaleOrMissingEstimatePasses) {
  DrbMarkState s(MarkParams{});
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 0.0);
  MarkRng rng(3);
  const auto p = pkt(1, EcnCodepoint::Ect1);
  EXPECT_EQ(decide_mark(s, p, FlowClass::L4S, {}, rng, 0.0), MarkDecision::Pass);
  s.refresh(estimate(1e6, 0.0, 10'000'000, 0.0), 0.0);
  EXPECT_EQ(decide_mark(s, p, FlowClass::L4S, {}, rng, 0.001), MarkDecision::MarkCe);
  EXPECT_EQ(decide_mark(s, p, FlowClass::L4S, {}, rng, 1.0), MarkDecision::Pass);
  // control segments carry nothing to mark
  EXPECT_EQ(decide_mark(s, pkt(1, EcnCodepoint::Ect1, 40), FlowClass::L4S, {}, rng, 0.001),
            MarkDecision::Pass);
}

TEST(DecideMark, SharedFrequencyOracle) {
  // p_l4s_coupled = (2/K) sqrt(p_classic) = 0.25
  const double k = k_constant(0.5);
  const double pc = std::pow(0.25 * k / 2.0, 2);
  const double rtt = 0.050;
  const double r_hat = 1500.0 * k / (rtt * std::sqrt(pc));
  DrbMarkState s(MarkParams{});
  s.observe_downlink(pkt(9, EcnCodepoint::NotEct, 40, tcp_flag::kSyn), FlowClass::NonEcn, 0.0);
  s.observe_downlink(pkt(9, EcnCodepoint::Ect0), FlowClass::ClassicEcn, rtt);
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, rtt);
  s.refresh(estimate(r_hat, 0.0, 0, rtt), rtt);
  ASSERT_EQ(s.mode(), DrbMode::Shared);
  ASSERT_NEAR(s.p_l4s_coupled(), 0.25, 1e-9);

  MarkRng rng(42);
  const auto p = pkt(1, EcnCodepoint::Ect1);
  int marks = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    marks += decide_mark(s, p, FlowClass::L4S, {}, rng, rtt) == MarkDecision::MarkCe;
  }
  EXPECT_NEAR(static_cast<double>(marks) / n, 0.25, 0.005);
}

TEST(DecideMark, SharedPolicies) {
  const auto setup = [](SharedPolicy policy) {
    MarkingOptions o;
    o.shared_policy = policy;
    auto s = std::make_unique<DrbMarkState>(MarkParams{}, o);
    s->observe_downlink(pkt(9, EcnCodepoint::NotEct, 40, tcp_flag::kSyn), FlowClass::NonEcn, 0.0);
    s->observe_downlink(pkt(9, EcnCodepoint::Ect0), FlowClass::ClassicEcn, 0.04);
    s->observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 0.04);
    s->refresh(estimate(4e6, 1e6, 60000, 0.04), 0.04);
    return s;
  };
  const auto c = setup(SharedPolicy::Coupled);
  EXPECT_EQ(c->probability_for(FlowClass::L4S), c->p_l4s_coupled());
  EXPECT_EQ(c->probability_for(FlowClass::ClassicEcn), c->p_classic());
  const auto a = setup(SharedPolicy::AllL4s);
  EXPECT_EQ(a->probability_for(FlowClass::ClassicEcn), a->p_l4s());
  const auto b = setup(SharedPolicy::AllClassic);
  EXPECT_EQ(b->probability_for(FlowClass::L4S), b->p_classic());
  const auto d = setup(SharedPolicy::Separate);
  EXPECT_EQ(d->probability_for(FlowClass::L4S), d->p_l4s());
}

TEST(DecideMark, DeterministicForSeed) {
  DrbMarkState s(MarkParams{});
  s.observe_downlink(pkt(1, EcnCodepoint::Ect1), FlowClass::L4S, 0.0);
  s.refresh(estimate(10e6, 2e6, 100000, 0.0), 0.0);
  MarkRng a(77), b(77);
  const auto p = pkt(1, EcnCodepoint::Ect1);
  for (int i = 0; i < 5000; ++i) {
    ASSERT_EQ(decide_mark(s, p, FlowClass::L4S, {}, a, 0.0),
              decide_mark(s, p, FlowClass::L4S, {}, b, 0.0));
  }
}

TEST(MarkRng, UniformInUnitInterval) {
  MarkRng r(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_FALSE(r.bernoulli(0.0));
  EXPECT_TRUE(r.bernoulli(1.0));
}
