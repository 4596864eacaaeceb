#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "l4span/errors.hpp"
#include "l4span/profile.hpp"

using namespace l4span;

namespace {

constexpr Seconds kW = kDefaultEstimationWindow;

DrbConfig am() { return DrbConfig{}; }
DrbConfig um() {
  DrbConfig d;
  d.rlc_mode = RlcMode::UM;
  return d;
}

// Eqs. 3 and 4 evaluated by brute force over a copy of the table.
struct BruteForce {
  double mean = 0.0;
  double stddev = 0.0;
};

BruteForce brute_force(const ProfileTable& t) {
  std::vector<ProfileEntry> tx;
  t.for_each([&](const ProfileEntry& e) {
    if (e.t_transmit) tx.push_back(e);
  });
  const double w = t.window();
  auto instant = [&](const ProfileEntry& k) {
    double bytes = 0.0;
    for (const auto& e : tx) {
      if (*e.t_transmit > *k.t_transmit - w && *e.t_transmit <= *k.t_transmit) {
        bytes += e.size_bytes;
      }
    }
    return bytes / w;
  };
  const Seconds tk = *tx.back().t_transmit;
  std::vector<double> rates;
  for (const auto& e : tx) {
    if (*e.t_transmit > tk - w) rates.push_back(instant(e));
  }
  BruteForce out;
  for (double r : rates) out.mean += r;
  out.mean /= rates.size();
  if (rates.size() >= 2) {
    for (double r : rates) out.stddev += (r - out.mean) * (r - out.mean);
    out.stddev = std::sqrt(out.stddev / rates.size());
  }
  return out;
}

}  // namespace

TEST(Profile, IngressMonotoneAndAdditive) {
  ProfileTable t(am());
  t.record_ingress(1, 1500, 0.0);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_FALSE(t.find(1)->t_transmit);
  EXPECT_THROW(t.record_ingress(1, 1500, 0.0), ProtocolError);
  t.record_ingress(2, 1000, 0.0);
  t.record_ingress(5, 700, 0.0);
  EXPECT_EQ(t.queued_bytes(), 3200u);
  EXPECT_THROW(t.record_ingress(6, 0, 0.0), DomainError);
}

TEST(Profile, FeedbackStampsTransmitAndDeliver) {
  ProfileTable t(am());
  for (PdcpSn sn = 1; sn <= 3; ++sn) t.record_ingress(sn, 1500, 0.0);
  const auto newly = t.on_f1u_feedback(2, std::nullopt, 5.0);
  ASSERT_EQ(newly.size(), 2u);
  EXPECT_EQ(*t.find(1)->t_transmit, 5.0);
  EXPECT_EQ(*t.find(2)->t_transmit, 5.0);
  EXPECT_FALSE(t.find(3)->t_transmit);
  t.on_f1u_feedback(2, 1, 9.0);
  EXPECT_EQ(*t.find(1)->t_deliver, 9.0);
  EXPECT_FALSE(t.find(2)->t_deliver);
  EXPECT_EQ(*t.highest_tx_sn(), 2u);
}

TEST(Profile, FeedbackErrors) {
  ProfileTable t(am());
  for (PdcpSn sn = 1; sn <= 3; ++sn) t.record_ingress(sn, 1500, 0.0);
  t.on_f1u_feedback(2, std::nullopt, 1.0);
  EXPECT_THROW(t.on_f1u_feedback(1, std::nullopt, 2.0), ProtocolError);
  EXPECT_THROW(t.on_f1u_feedback(9, std::nullopt, 2.0), ProtocolError);
  EXPECT_THROW(t.on_f1u_feedback(2, 3, 2.0), ProtocolError);

  ProfileTable u(um());
  u.record_ingress(1, 1500, 0.0);
  EXPECT_THROW(u.on_f1u_feedback(1, 1, 1.0), ProtocolError);
  u.on_f1u_feedback(1, std::nullopt, 1.0);
  EXPECT_FALSE(u.find(1)->t_deliver);
}

TEST(Profile, InstantRateFrozenValues) {
  ProfileTable t(am());
  t.record_ingress(1, 1500, 0.0);
  t.on_f1u_feedback(1, std::nullopt, 1.0);
  EXPECT_NEAR(t.egress_rate_instant(1), 120481.927711, 1e-5);

  ProfileTable two(am());
  two.record_ingress(1, 1500, 0.0);
  two.record_ingress(2, 1500, 0.0);
  two.on_f1u_feedback(2, std::nullopt, 1.0);
  EXPECT_NEAR(two.egress_rate_instant(2), 2.0 * 1500.0 / kW, 1e-6);

  EXPECT_THROW(t.egress_rate_instant(7), NotFoundError);
  t.record_ingress(2, 1500, 1.0);
  EXPECT_THROW(t.egress_rate_instant(2), InvalidOperation);
}

TEST(Profile, SmoothedEstimateBasics) {
  ProfileTable t(am());
  EXPECT_FALSE(t.egress_rate_smoothed());
  // one packet per millisecond, drained as it arrives: identical rates
  PdcpSn sn = 0;
  for (int i = 1; i <= 40; ++i) {
    t.record_ingress(++sn, 1000, i * 1e-3);
    t.on_f1u_feedback(sn, std::nullopt, i * 1e-3 + 1e-4);
  }
  auto est = *t.egress_rate_smoothed();
  EXPECT_NEAR(est.e_hat, 0.0, 1e-6);
  EXPECT_EQ(est.n_queue, 0u);
  EXPECT_EQ(est.sojourn_hat, 0.0);

  for (int i = 0; i < 10; ++i) t.record_ingress(++sn, 1000, 0.05);
  est = *t.egress_rate_smoothed();
  EXPECT_EQ(est.n_queue, 10000u);
  EXPECT_NEAR(est.sojourn_hat, 10000.0 / est.r_hat, 1e-12);
}

TEST(Profile, MatchesBruteForceOnRandomTables) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> size(40, 1500), burst(0, 4), fb(0, 3);
  std::uniform_real_distribution<double> gap(1e-4, 3e-3);
  for (int trial = 0; trial < 50; ++trial) {
    ProfileTable t(am());
    PdcpSn sn = 0, tx = 0;
    Seconds now = 0.0;
    for (int step = 0; step < 300; ++step) {
      now += gap(rng);
      for (int b = burst(rng); b > 0; --b) t.record_ingress(++sn, size(rng), now);
      const int n = fb(rng);
      if (n > 0 && tx < sn) {
        tx = std::min<PdcpSn>(sn, tx + n);
        t.on_f1u_feedback(tx, std::nullopt, now);
        const auto est = *t.egress_rate_smoothed();
        const auto bf = brute_force(t);
        ASSERT_NEAR(est.r_hat, bf.mean, 1e-6 * std::max(1.0, bf.mean));
        ASSERT_NEAR(est.e_hat, bf.stddev, 1e-6 * std::max(1.0, bf.mean));
        // conservation
        ASSERT_EQ(est.n_queue, t.ingressed_bytes() - t.transmitted_bytes());
      }
    }
  }
}

TEST(Profile, SyntheticConstantDrainWithinFivePercent) {
  for (double rate : {1e6, 5e6, 12.5e6}) {
    ProfileTable t(um());
    const Seconds slot = 0.0005;
    double credit = 0.0;
    PdcpSn sn = 0, tx = 0;
    for (int i = 0; i < 400; ++i) {
      const Seconds now = i * slot;
      while (t.queued_bytes() < 200000) t.record_ingress(++sn, 1500, now);
      credit += rate * slot;
      bool sent = false;
      while (credit >= 1500.0) {
        credit -= 1500.0;
        ++tx;
        sent = true;
      }
      if (sent) t.on_f1u_feedback(tx, std::nullopt, now);
    }
    const auto est = *t.egress_rate_smoothed();
    // a window holds a whole number of packets, so low rates carry up to
    // one MSS per window of quantisation error
    const double tol = std::max(0.05 * rate, 1500.0 / kDefaultEstimationWindow);
    EXPECT_NEAR(est.r_hat, rate, tol) << rate;
  }
}

TEST(Profile, StationaryRandomDrainHasNearZeroMeanError) {
  std::mt19937_64 rng(4);
  const double mean_rate = 5e6;
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  ProfileTable t(um());
  const Seconds slot = 0.0005;
  double credit = 0.0, err_sum = 0.0;
  int samples = 0;
  PdcpSn sn = 0, tx = 0;
  for (int i = 0; i < 20000; ++i) {
    const Seconds now = i * slot;
    while (t.queued_bytes() < 200000) t.record_ingress(++sn, 1500, now);
    credit += mean_rate * jitter(rng) * slot;
    bool sent = false;
    while (credit >= 1500.0) {
      credit -= 1500.0;
      ++tx;
      sent = true;
    }
    if (sent) {
      t.on_f1u_feedback(tx, std::nullopt, now);
      if (i > 200) {
        err_sum += t.egress_rate_smoothed()->r_hat - mean_rate;
        ++samples;
      }
    }
    t.gc_delivered(0.1, now);
  }
  EXPECT_LE(std::abs(err_sum / samples) / mean_rate, 0.05);
}

TEST(Profile, GcKeepsEstimateAndAnchor) {
  ProfileTable t(am());
  PdcpSn sn = 0;
  for (int i = 1; i <= 100; ++i) {
    t.record_ingress(++sn, 1500, i * 1e-3);
    t.on_f1u_feedback(sn, sn, i * 1e-3 + 2e-4);
  }
  const auto before = *t.egress_rate_smoothed();
  const auto size_before = t.size();
  t.gc_delivered(1.0, 0.1);  // nothing older than the horizon
  EXPECT_EQ(t.size(), size_before);
  t.gc_delivered(0.02, 0.1);
  EXPECT_LT(t.size(), size_before);
  EXPECT_FALSE(t.find(1));
  const auto after = *t.egress_rate_smoothed();
  EXPECT_EQ(before.r_hat, after.r_hat);
  EXPECT_EQ(before.e_hat, after.e_hat);
  EXPECT_EQ(before.n_queue, after.n_queue);
  // everything delivered long ago: the newest transmitted entry survives
  t.gc_delivered(0.0, 10.0);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_TRUE(t.egress_rate_smoothed());
  EXPECT_THROW(t.egress_rate_instant(1), NotFoundError);
}

TEST(Profile, UndeliveredEntriesSurviveGcOnAm) {
  ProfileTable t(am());
  for (PdcpSn sn = 1; sn <= 5; ++sn) t.record_ingress(sn, 1500, 0.0);
  t.on_f1u_feedback(5, std::nullopt, 0.001);
  t.gc_delivered(0.0, 10.0);
  EXPECT_EQ(t.size(), 5u);
}

TEST(Profile, TimestampsOrdered) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> burst(0, 3);
  ProfileTable t(am());
  PdcpSn sn = 0, tx = 0, dlv = 0;
  for (int i = 1; i <= 2000; ++i) {
    const Seconds now = i * 5e-4;
    for (int b = burst(rng); b > 0; --b) t.record_ingress(++sn, 1200, now);
    if (tx < sn && burst(rng) > 1) {
      tx = std::min<PdcpSn>(sn, tx + 2);
      dlv = tx > 3 ? tx - 3 : dlv;
      const auto prev = t.highest_tx_sn();
      t.on_f1u_feedback(tx, dlv ? std::optional<PdcpSn>(dlv) : std::nullopt, now);
      if (prev) {
        ASSERT_GE(*t.highest_tx_sn(), *prev);
      }
    }
  }
  t.for_each([](const ProfileEntry& e) {
    if (e.t_transmit) {
      EXPECT_LE(e.t_ingress, *e.t_transmit);
    }
    if (e.t_deliver) {
      EXPECT_LE(*e.t_transmit, *e.t_deliver);
    }
  });
}
