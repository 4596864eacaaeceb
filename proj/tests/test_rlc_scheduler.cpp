#include <gtest/gtest.h>

#include <random>

#include "l4span/errors.hpp"
#include "l4span/rlc.hpp"
#include "l4span/scheduler.hpp"

using namespace l4span;

namespace {

Packet sdu(std::uint64_t id, std::uint32_t size = 1500) {
  Packet p;
  p.pkt_id = id;
  p.size_bytes = size;
  return p;
}

}  // namespace

TEST(Rlc, FifoAndTailDrop) {
  DrbConfig d;
  d.max_queue_sdus = 256;
  RlcQueue q(d);
  for (PdcpSn sn = 1; sn <= 256; ++sn) {
    ASSERT_EQ(q.enqueue(sdu(sn), sn, 0.0, 0.0), EnqueueResult::Queued);
  }
  EXPECT_EQ(q.enqueue(sdu(999), 257, 0.0, 0.0), EnqueueResult::DroppedTail);
  EXPECT_EQ(q.dropped_sdus(), 1u);
  const auto out = q.transmit(10 * 1500.0, 0.0, 0.0005);
  ASSERT_EQ(out.size(), 10u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].sdu.sn, i + 1);
  EXPECT_EQ(*q.highest_tx_sn(), 10u);
}

TEST(Rlc, PartialSduCarriesOver) {
  RlcQueue q(DrbConfig{});
  q.enqueue(sdu(1), 1, 0.0, 0.0);
  double unused = -1;
  EXPECT_TRUE(q.transmit(1000.0, 0.0, 0.0005, &unused).empty());
  EXPECT_EQ(unused, 0.0);
  EXPECT_FALSE(q.highest_tx_sn());
  EXPECT_EQ(q.standing_bytes(), 1500u);
  const auto out = q.transmit(1000.0, 0.0005, 0.001, &unused);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].tx_time, 0.001);
  EXPECT_EQ(*out[0].sdu.first_tx, 0.0);
  EXPECT_NEAR(unused, 500.0, 1e-9);
}

TEST(Rlc, ByteConservationUnderRandomLoad) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::uint32_t> size(40, 1500);
  std::uniform_real_distribution<double> budget(0.0, 6000.0);
  DrbConfig d;
  d.max_queue_sdus = 64;
  RlcQueue q(d);
  PdcpSn sn = 0;
  for (int slot = 0; slot < 20000; ++slot) {
    for (int k = 0; k < 3; ++k) {
      ++sn;
      q.enqueue(sdu(sn, size(rng)), sn, 0.0, 0.0);
    }
    q.transmit(budget(rng), slot * 5e-4, (slot + 1) * 5e-4);
    ASSERT_EQ(q.offered_bytes(),
              q.transmitted_bytes() + q.standing_bytes() + q.dropped_bytes());
  }
}

TEST(Rlc, AmDeliveryInOrderAndUmGivesUp) {
  RlcQueue am(DrbConfig{});
  EXPECT_DOUBLE_EQ(*am.schedule_delivery(1, 1.0, 0.008, true, 0.020), 1.0 + 0.008 + 0.020);
  // a later SDU cannot overtake the one waiting for ARQ
  EXPECT_DOUBLE_EQ(*am.schedule_delivery(2, 1.001, 0.008, false, 0.020), 1.0 + 0.008 + 0.020);
  EXPECT_FALSE(am.take_delivered(1.0));
  EXPECT_EQ(*am.take_delivered(1.03), 2u);

  DrbConfig u;
  u.rlc_mode = RlcMode::UM;
  RlcQueue um(u);
  EXPECT_FALSE(um.schedule_delivery(1, 1.0, 0.008, true, 0.020));
  EXPECT_DOUBLE_EQ(*um.schedule_delivery(2, 1.0, 0.008, false, 0.020), 1.0 + 0.008);
  EXPECT_FALSE(um.take_delivered(5.0));
}

TEST(Scheduler, SingleUeSlotBudget) {
  MacScheduler s(SchedulerPolicy::RoundRobin, 0.0005, 1);
  const auto b = s.allocate({{1e9, 5e6}});
  EXPECT_NEAR(b[0], 2500.0, 1e-9);
  EXPECT_NEAR(s.allocate({{1000.0, 5e6}})[0], 1000.0, 1e-9);
}

TEST(Scheduler, RoundRobinSplitsAndRedistributes) {
  MacScheduler s(SchedulerPolicy::RoundRobin, 0.0005, 2);
  auto b = s.allocate({{1e9, 5e6}, {1e9, 5e6}});
  EXPECT_LE(std::abs(b[0] - b[1]), 1500.0);
  EXPECT_NEAR(b[0] + b[1], 2500.0, 1e-9);
  b = s.allocate({{0.0, 5e6}, {1e9, 5e6}});
  EXPECT_EQ(b[0], 0.0);
  EXPECT_NEAR(b[1], 2500.0, 1e-9);
  // small demand is met, the rest goes to the other UE
  b = s.allocate({{500.0, 5e6}, {1e9, 5e6}});
  EXPECT_NEAR(b[0], 500.0, 1e-9);
  EXPECT_NEAR(b[1], 2000.0, 1e-9);
}

TEST(Scheduler, WorkConservingProperty) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> backlog(0.0, 4000.0), cap(1e6, 1e7);
  std::uniform_int_distribution<int> empty(0, 3);
  for (auto policy : {SchedulerPolicy::RoundRobin, SchedulerPolicy::ProportionalFair}) {
    MacScheduler s(policy, 0.0005, 4);
    for (int slot = 0; slot < 5000; ++slot) {
      std::vector<UeDemand> d(4);
      for (auto& x : d) x = {empty(rng) == 0 ? 0.0 : backlog(rng), cap(rng)};
      const auto b = s.allocate(d);
      double used = 0.0;
      bool someone_unserved = false;
      for (std::size_t i = 0; i < 4; ++i) {
        ASSERT_LE(b[i], d[i].backlog_bytes + 1e-9);
        ASSERT_GE(b[i], 0.0);
        used += b[i] / (d[i].capacity * 0.0005);
        if (b[i] < d[i].backlog_bytes - 1e-6) someone_unserved = true;
      }
      ASSERT_LE(used, 1.0 + 1e-9);
      // unmet demand means the whole slot went out
      if (someone_unserved) {
        ASSERT_NEAR(used, 1.0, 1e-9);
      }
    }
  }
}

TEST(Scheduler, ProportionalFairTracksAverages) {
  MacScheduler s(SchedulerPolicy::ProportionalFair, 0.0005, 2);
  double served0 = 0.0, served1 = 0.0;
  for (int slot = 0; slot < 20000; ++slot) {
    const auto b = s.allocate({{1e9, 5e6}, {1e9, 2.5e6}});
    served0 += b[0];
    served1 += b[1];
  }
  // equal time shares under PF with steady channels
  EXPECT_NEAR(served0 / (served0 + served1), 2.0 / 3.0, 0.02);
  EXPECT_GT(s.average_rate(0), 0.0);
  EXPECT_THROW(s.allocate({{1.0, 1.0}}), InvalidOperation);
}
