#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "l4span/metrics.hpp"
#include "l4span/simulator.hpp"

using namespace l4span;

TEST(Percentiles, NearestRank) {
  std::vector<double> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  const auto p = percentiles(v);
  EXPECT_EQ(p.n, 100u);
  EXPECT_DOUBLE_EQ(p.mean, 50.5);
  EXPECT_DOUBLE_EQ(p.p50, 50.0);
  EXPECT_DOUBLE_EQ(p.p90, 90.0);
  EXPECT_DOUBLE_EQ(p.p99, 99.0);
  EXPECT_DOUBLE_EQ(p.p999, 100.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 100.0);
  EXPECT_DOUBLE_EQ(quantile({}, 0.5), 0.0);
  EXPECT_EQ(percentiles({}).n, 0u);
}

TEST(Percentiles, MatchSortedIndexOnRandomData) {
  std::mt19937_64 rng(4);
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial * 37);
    for (auto& x : v) x = d(rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.1, 0.5, 0.9, 0.99}) {
      const std::size_t k = static_cast<std::size_t>(std::ceil(q * v.size()));
      EXPECT_DOUBLE_EQ(quantile(v, q), sorted[k == 0 ? 0 : k - 1]);
    }
  }
}

class MetricsOnRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scenario_ = new Scenario(parse_scenario(
        R"({"name":"metrics","horizon_secs":5,"seed":2,
            "ues":[{"ue_id":1,"channel":{"type":"static","mbps":30}},{"ue_id":2}],
            "flows":[{"ue":1,"sender":"prague"},{"ue":2,"sender":"prague"}],
            "metrics":{"steady_state_secs":1.5}})",
        "test"));
    result_ = new SimResult(run_scenario(*scenario_));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete scenario_;
  }
  static Scenario* scenario_;
  static SimResult* result_;
};
Scenario* MetricsOnRun::scenario_ = nullptr;
SimResult* MetricsOnRun::result_ = nullptr;

TEST_F(MetricsOnRun, SummaryRecomputableFromIntervals) {
  const auto& r = result_->records;
  const auto& s = result_->summary;
  std::map<std::uint32_t, double> bytes;
  for (const auto& iv : r.flow_intervals) {
    if (iv.t_end > 1.5 + 1e-9) bytes[iv.flow] += static_cast<double>(iv.delivered_bytes);
  }
  ASSERT_EQ(s.flows.size(), 2u);
  for (const auto& f : s.flows) {
    EXPECT_NEAR(f.throughput_mbps, bytes[f.flow] * 8.0 / 3.5 / 1e6, 1e-9);
    EXPECT_GT(f.throughput_mbps, 5.0);
  }
  std::map<std::uint16_t, std::pair<double, double>> drb;
  for (const auto& iv : r.drb_intervals) {
    if (iv.t_end <= 1.5 + 1e-9) continue;
    drb[iv.ue_id].first += static_cast<double>(iv.tx_bytes);
    drb[iv.ue_id].second += iv.capacity_bytes;
  }
  ASSERT_EQ(s.drbs.size(), 2u);
  for (const auto& d : s.drbs) {
    EXPECT_NEAR(d.utilization, drb[d.ue_id].first / drb[d.ue_id].second, 1e-12);
    EXPECT_LE(d.utilization, 1.0 + 1e-3);
  }
  // summarize is a pure function of the records
  std::ostringstream a, b;
  write_summary_json(a, s);
  write_summary_json(b, summarize(*scenario_, r));
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(MetricsOnRun, IntervalsCoverHorizon) {
  const auto& r = result_->records;
  std::map<std::uint32_t, int> per_flow;
  for (const auto& iv : r.flow_intervals) ++per_flow[iv.flow];
  for (const auto& [flow, n] : per_flow) EXPECT_NEAR(n, 50, 1) << flow;
  for (std::size_t i = 1; i < r.flow_intervals.size(); ++i) {
    ASSERT_GE(r.flow_intervals[i].t_end, r.flow_intervals[i - 1].t_end);
  }
}

TEST_F(MetricsOnRun, WritersAreDeterministicAndLineDelimited) {
  auto render = [&] {
    std::ostringstream os;
    write_flow_intervals(os, result_->records);
    write_drb_intervals(os, result_->records);
    write_packets(os, result_->records);
    write_flow_intervals_csv(os, result_->records);
    write_packets_csv(os, result_->records);
    write_summary_text(os, result_->summary);
    return os.str();
  };
  EXPECT_EQ(render(), render());

  std::ostringstream fl;
  write_flow_intervals(fl, result_->records);
  std::size_t lines = 0;
  for (char c : fl.str()) lines += c == '\n';
  EXPECT_EQ(lines, result_->records.flow_intervals.size());

  std::ostringstream csv;
  write_packets_csv(csv, result_->records);
  lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  EXPECT_EQ(lines, result_->records.packets.size() + 1);  // header
}
