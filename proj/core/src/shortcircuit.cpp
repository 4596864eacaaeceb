#include "l4span/shortcircuit.hpp"

#include <cmath>

#include "l4span/errors.hpp"

namespace l4span {

std::string_view to_string(FeedbackMode mode) noexcept {
  switch (mode) {
    case FeedbackMode::AccEcn: return "accecn";
    case FeedbackMode::ClassicEcn: return "classic-ecn";
    case FeedbackMode::DownlinkFallback: return "downlink-fallback";
  }
  return "?";
}

FeedbackMode classify_feedback_mode(const Packet& first_ack) noexcept {
  if (!first_ack.is_tcp() || !first_ack.tcp) {
    return FeedbackMode::DownlinkFallback;
  }
  if (first_ack.tcp->accecn) return FeedbackMode::AccEcn;
  if (first_ack.tcp->has(tcp_flag::kEce)) return FeedbackMode::ClassicEcn;
  return FeedbackMode::DownlinkFallback;
}

void FlowFeedbackState::record_tentative_mark(const Packet& pkt,
                                              MarkDecision decision) {
  if (decision != MarkDecision::Pass && decision != MarkDecision::TentativeMark) {
    throw InvalidOperation("tentative accounting only takes Pass or TentativeMark");
  }
  const ByteCount payload = pkt.payload_bytes();
  if (payload == 0) return;

  if (decision == MarkDecision::TentativeMark || pkt.ecn == EcnCodepoint::Ce) {
    ++ce_pkts_;
    ce_bytes_ += payload;
    pending_ce_ += payload;
  } else if (pkt.ecn == EcnCodepoint::Ect1) {
    ect1_bytes_ += payload;
  } else {
    ect0_bytes_ += payload;
  }
  l4s_flow_ = pkt.ecn == EcnCodepoint::Ect1 || pkt.ecn == EcnCodepoint::Ce;
  pending_total_ += payload;
}

void FlowFeedbackState::on_downlink_cwr() noexcept {
  ece_latched_ = false;
  latch_baseline_ = ce_pkts_;
}

void FlowFeedbackState::refresh_ratio() noexcept {
  if (pending_total_ > 0) {
    last_split_ratio_ =
        static_cast<double>(pending_ce_) / static_cast<double>(pending_total_);
    pending_ce_ = 0;
    pending_total_ = 0;
  }
}

bool FlowFeedbackState::rewrite_ack(Packet& ack) {
  if (!ack.tcp || mode_ == FeedbackMode::DownlinkFallback) return false;
  auto& tcp = *ack.tcp;
  if (tcp.has(tcp_flag::kSyn)) {
    // handshake flags negotiate ECN; they are not feedback
    if (!highest_acked_) highest_acked_ = tcp.ack_no;
    return false;
  }

  if (!highest_acked_) {
    highest_acked_ = tcp.ack_no;
  }
  const auto delta = static_cast<std::uint32_t>(tcp.ack_no - *highest_acked_);
  if (static_cast<std::int32_t>(delta) < 0) return false;  // stale duplicate

  if (mode_ == FeedbackMode::AccEcn) {
    if (delta > 0) {
      refresh_ratio();
      const double ce_share = delta * last_split_ratio_ + ce_carry_;
      const auto ce_part = static_cast<ByteCount>(std::floor(ce_share));
      ce_carry_ = ce_share - static_cast<double>(ce_part);
      reported_.ce_bytes += ce_part;
      (l4s_flow_ ? reported_.ect1_bytes : reported_.ect0_bytes) += delta - ce_part;
    }
    reported_.ace_counter = static_cast<std::uint8_t>(ce_pkts_ % 8);
    tcp.accecn = reported_;
  } else {
    if (ce_pkts_ > latch_baseline_) ece_latched_ = true;
    tcp.set(tcp_flag::kEce, ece_latched_);
  }
  highest_acked_ = tcp.ack_no;
  ack.header_rewritten = true;
  return true;
}

std::optional<Packet> fallback_mark_downlink(const Packet& pkt,
                                             MarkDecision decision) {
  switch (decision) {
    case MarkDecision::Drop:
      return std::nullopt;
    case MarkDecision::MarkCe: {
      if (pkt.ecn == EcnCodepoint::NotEct) {
        throw InvalidOperation("cannot CE-mark a NotEct packet");
      }
      Packet out = pkt;
      out.ecn = EcnCodepoint::Ce;
      out.header_rewritten = true;
      return out;
    }
    case MarkDecision::Pass:
    case MarkDecision::TentativeMark:
      break;
  }
  return pkt;
}

}  // namespace l4span
