#include "l4span/rlc.hpp"

#include <algorithm>

#include "l4span/errors.hpp"

namespace l4span {

RlcQueue::RlcQueue(DrbConfig drb) : drb_(drb) { drb_.validate(); }

EnqueueResult RlcQueue::enqueue(const Packet& pkt, PdcpSn sn, Seconds cu_ingress,
                                Seconds now) {
  offered_bytes_ += pkt.size_bytes;
  if (sdus_.size() >= drb_.max_queue_sdus) {
    dropped_bytes_ += pkt.size_bytes;
    ++dropped_sdus_;
    return EnqueueResult::DroppedTail;
  }
  RlcSdu sdu;
  sdu.pkt = pkt;
  sdu.sn = sn;
  sdu.cu_ingress = cu_ingress;
  sdu.enqueued_at = now;
  sdu.head_at = now;
  sdu.remaining = pkt.size_bytes;
  sdus_.push_back(std::move(sdu));
  backlog_ += pkt.size_bytes;
  standing_bytes_ += pkt.size_bytes;
  return EnqueueResult::Queued;
}

std::vector<TransmittedSdu> RlcQueue::transmit(double budget, Seconds slot_start,
                                               Seconds slot_end, double* unused) {
  std::vector<TransmittedSdu> done;
  while (budget > 0.0 && !sdus_.empty()) {
    auto& head = sdus_.front();
    if (!head.first_tx) head.first_tx = slot_start;
    const double sent = std::min(budget, head.remaining);
    head.remaining -= sent;
    backlog_ -= sent;
    budget -= sent;
    // sub-byte leftovers from fractional budgets count as complete
    if (head.remaining > 1e-6) break;
    backlog_ -= head.remaining;
    head.remaining = 0.0;
    standing_bytes_ -= head.pkt.size_bytes;
    transmitted_bytes_ += head.pkt.size_bytes;
    highest_tx_sn_ = head.sn;
    done.push_back({std::move(head), slot_end});
    sdus_.pop_front();
    if (!sdus_.empty()) {
      sdus_.front().head_at = budget > 0.0 ? slot_start : slot_end;
    }
  }
  if (sdus_.empty()) backlog_ = 0.0;
  if (unused) *unused = std::max(0.0, budget);
  return done;
}

std::optional<Seconds> RlcQueue::schedule_delivery(PdcpSn sn, Seconds tx_time,
                                                   Seconds delivery_delay,
                                                   bool lost, Seconds arq_delay) {
  if (lost && drb_.rlc_mode == RlcMode::UM) return std::nullopt;
  Seconds at = tx_time + delivery_delay + (lost ? arq_delay : 0.0);
  if (drb_.rlc_mode == RlcMode::AM) {
    at = std::max(at, last_release_);  // in-order release to PDCP
    last_release_ = at;
    awaiting_report_.emplace_back(sn, at);
  }
  return at;
}

std::optional<PdcpSn> RlcQueue::take_delivered(Seconds now) {
  std::optional<PdcpSn> highest;
  while (!awaiting_report_.empty() && awaiting_report_.front().second <= now) {
    highest = awaiting_report_.front().first;
    awaiting_report_.pop_front();
  }
  return highest;
}

}  // namespace l4span
