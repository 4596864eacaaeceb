#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "l4span/marking.hpp"
#include "l4span/types.hpp"

namespace l4span {

enum class FeedbackMode : std::uint8_t { AccEcn, ClassicEcn, DownlinkFallback };
std::string_view to_string(FeedbackMode mode) noexcept;

/// Decides how a flow's congestion feedback can be rewritten, from the first
/// uplink segment of the flow (normally the SYN-ACK).
FeedbackMode classify_feedback_mode(const Packet& first_ack) noexcept;

/// Per-flow short-circuit bookkeeping.
///
/// Two sets of counters are kept. The accounted counters (ce_pkts, ce_bytes,
/// ect0_bytes, ect1_bytes) grow as downlink packets pass the CU. The
/// reported byte counters are what ACKs carry: each ACK's newly acked bytes
/// are split CE / not-CE by the ratio of bytes accounted since the previous
/// ACK.
class FlowFeedbackState {
 public:
  explicit FlowFeedbackState(FeedbackMode mode = FeedbackMode::DownlinkFallback)
      : mode_(mode) {}

  /// Accounts a downlink packet that is forwarded unmodified. `decision`
  /// must be Pass or TentativeMark; packets already CE on arrival count as
  /// CE either way.
  void record_tentative_mark(const Packet& pkt, MarkDecision decision);

  /// A downlink segment carried CWR: the classic ECE latch is released.
  void on_downlink_cwr() noexcept;

  /// Rewrites the feedback fields of an uplink ACK in place. Regressing ACKs and
  /// SYN-ACKs pass through untouched. Returns true when the header was rewritten.
  bool rewrite_ack(Packet& ack);

  FeedbackMode mode() const noexcept { return mode_; }
  void set_mode(FeedbackMode mode) noexcept { mode_ = mode; }

  std::uint64_t ce_pkts() const noexcept { return ce_pkts_; }
  ByteCount ce_bytes() const noexcept { return ce_bytes_; }
  ByteCount ect0_bytes() const noexcept { return ect0_bytes_; }
  ByteCount ect1_bytes() const noexcept { return ect1_bytes_; }
  ByteCount accounted_bytes() const noexcept {
    return ce_bytes_ + ect0_bytes_ + ect1_bytes_;
  }
  double last_split_ratio() const noexcept { return last_split_ratio_; }
  bool ece_latched() const noexcept { return ece_latched_; }
  std::optional<std::uint32_t> highest_acked() const noexcept {
    return highest_acked_;
  }
  const AccEcnFields& reported() const noexcept { return reported_; }

 private:
  void refresh_ratio() noexcept;

  FeedbackMode mode_;
  std::uint64_t ce_pkts_ = 0;
  ByteCount ce_bytes_ = 0;
  ByteCount ect0_bytes_ = 0;
  ByteCount ect1_bytes_ = 0;

  // accounted since the previous ACK
  ByteCount pending_ce_ = 0;
  ByteCount pending_total_ = 0;
  double last_split_ratio_ = 0.0;

  // reported byte split; fractional remainder carried so totals stay exact
  AccEcnFields reported_{};
  double ce_carry_ = 0.0;
  bool l4s_flow_ = false;

  std::optional<std::uint32_t> highest_acked_;
  std::uint64_t latch_baseline_ = 0;
  bool ece_latched_ = false;
};

/// Applies a marking decision directly to a downlink packet's IP header.
/// MarkCe sets CE, Drop returns nullopt, Pass/TentativeMark leave the packet
/// unchanged. Throws InvalidOperation for MarkCe on a NotEct packet.
std::optional<Packet> fallback_mark_downlink(const Packet& pkt,
                                             MarkDecision decision);

}  // namespace l4span
