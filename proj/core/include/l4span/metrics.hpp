#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l4span/marking.hpp"
#include "l4span/scenario.hpp"
#include "l4span/types.hpp"

namespace l4span {

/// Where a delivered packet's one-way delay went. Components sum to it.
struct DelayBreakdown {
  Seconds propagation = 0.0;
  Seconds queuing = 0.0;
  Seconds scheduling = 0.0;
  Seconds retransmission = 0.0;
  Seconds total() const noexcept {
    return propagation + queuing + scheduling + retransmission;
  }
};

struct PacketRecord {
  std::uint32_t flow = 0;
  std::uint64_t pkt_id = 0;
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 0;
  std::uint32_t size_bytes = 0;
  Seconds sent_at = 0.0;
  Seconds cu_ingress = 0.0;
  Seconds tx_time = 0.0;
  Seconds delivered_at = 0.0;
  DelayBreakdown delay{};
  Seconds sojourn = 0.0;            // RLC enqueue -> transmit complete
  std::optional<Seconds> predicted_sojourn;  // profile estimate at ingress
  bool ce = false;
  bool retransmission = false;
};

struct FlowInterval {
  Seconds t_end = 0.0;
  std::uint32_t flow = 0;
  ByteCount delivered_bytes = 0;   // in-order payload reaching the app
  double throughput_mbps = 0.0;
  std::optional<Seconds> rtt_mean;  // mean of samples in the interval
  std::uint32_t rtt_samples = 0;
  double cwnd_bytes = 0.0;
  std::uint32_t marks = 0;
  std::uint32_t drops = 0;
};

struct DrbInterval {
  Seconds t_end = 0.0;
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 0;
  ByteCount queue_bytes = 0;       // RLC standing bytes at interval end
  std::uint32_t slots = 0;
  std::uint32_t nonempty_slots = 0;
  ByteCount tx_bytes = 0;
  double capacity_bytes = 0.0;     // integral of the UE's channel
  double p_l4s = 0.0;
  double p_classic = 0.0;
  double r_hat = 0.0;
  double e_hat = 0.0;
  double sojourn_hat = 0.0;
  std::uint32_t feedback_msgs = 0;
};

struct MarkLogEntry {
  Seconds at = 0.0;
  std::uint32_t flow = 0;
  std::uint64_t pkt_id = 0;
  MarkDecision decision = MarkDecision::Pass;
};

struct FeedbackLatency {
  std::uint32_t flow = 0;
  Seconds decided_at = 0.0;
  Seconds observed_at = 0.0;
};

struct RttSample {
  std::uint32_t flow = 0;
  Seconds at = 0.0;
  Seconds rtt = 0.0;
};

struct FlowInfoRecord {
  std::uint32_t flow = 0;
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 0;
  SenderKind sender = SenderKind::Prague;
  Seconds start = 0.0;
  std::optional<Seconds> completed_at;
  ByteCount size_bytes = 0;
  std::uint64_t retransmissions = 0;
};

/// Everything a run produces. Summaries are pure functions of this.
struct Records {
  std::vector<FlowInfoRecord> flows;
  std::vector<FlowInterval> flow_intervals;
  std::vector<DrbInterval> drb_intervals;
  std::vector<PacketRecord> packets;
  std::vector<RttSample> rtts;
  std::vector<FeedbackLatency> feedback;
  std::vector<MarkLogEntry> marks;
  std::uint64_t events = 0;
};

struct Percentiles {
  std::size_t n = 0;
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double p999 = 0.0;
};

/// Nearest-rank percentiles (q in [0, 1]) over a copy of `v`.
Percentiles percentiles(std::vector<double> v);
double quantile(std::vector<double> v, double q);

struct FlowSummary {
  std::uint32_t flow = 0;
  std::string sender;
  std::uint16_t ue_id = 0;
  double throughput_mbps = 0.0;          // steady state
  Percentiles one_way_ms{};
  Percentiles queuing_ms{};
  Percentiles rtt_ms{};
  Percentiles feedback_latency_ms{};
  std::optional<double> completion_secs;
  std::uint64_t marks = 0;
  std::uint64_t drops = 0;
  std::uint64_t retransmissions = 0;
};

struct DrbSummary {
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 0;
  double utilization = 0.0;              // tx / capacity, steady state
  double nonempty_fraction = 0.0;
  double mean_queue_bytes = 0.0;
  double throughput_mbps = 0.0;
};

struct Summary {
  std::string scenario;
  std::uint64_t seed = 0;
  Seconds horizon = 0.0;
  Seconds steady_state = 0.0;
  std::vector<FlowSummary> flows;
  std::vector<DrbSummary> drbs;
  double cell_utilization = 0.0;         // mean over DRBs' UEs
  std::uint64_t events = 0;
};

Summary summarize(const Scenario& s, const Records& r);

/// Line-delimited JSON writers. Output depends only on the records.
void write_flow_intervals(std::ostream& os, const Records& r);
void write_drb_intervals(std::ostream& os, const Records& r);
void write_packets(std::ostream& os, const Records& r);
void write_summary_json(std::ostream& os, const Summary& s);
void write_summary_text(std::ostream& os, const Summary& s);
void write_flow_intervals_csv(std::ostream& os, const Records& r);
void write_packets_csv(std::ostream& os, const Records& r);

}  // namespace l4span
