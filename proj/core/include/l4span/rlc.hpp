#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "l4span/types.hpp"

namespace l4span {

struct RlcSdu {
  Packet pkt;
  PdcpSn sn = 0;
  Seconds cu_ingress = 0.0;
  Seconds enqueued_at = 0.0;
  Seconds head_at = 0.0;               // became head of the queue
  std::optional<Seconds> first_tx;     // first byte left
  double remaining = 0.0;              // bytes still to send
};

struct TransmittedSdu {
  RlcSdu sdu;
  Seconds tx_time = 0.0;
};

enum class EnqueueResult : std::uint8_t { Queued, DroppedTail };

/// In-order RLC transmit queue of one DRB, with the DU-side delivery
/// bookkeeping needed for F1-U reports.
class RlcQueue {
 public:
  explicit RlcQueue(DrbConfig drb);

  EnqueueResult enqueue(const Packet& pkt, PdcpSn sn, Seconds cu_ingress,
                        Seconds now);

  /// Sends up to `budget` bytes in the slot [slot_start, slot_end). SDUs
  /// that complete get tx_time = slot_end. Unused budget is returned in
  /// `unused` when non-null.
  std::vector<TransmittedSdu> transmit(double budget, Seconds slot_start,
                                       Seconds slot_end, double* unused = nullptr);

  /// Records the time an SDU reaches the UE, enforcing in-order release.
  /// `lost` means the first attempt failed: UM gives up (nullopt), AM
  /// re-delivers `arq_delay` later.
  std::optional<Seconds> schedule_delivery(PdcpSn sn, Seconds tx_time,
                                           Seconds delivery_delay, bool lost,
                                           Seconds arq_delay);

  /// Highest SN whose delivery completed by `now` since the last call
  /// (AM only).
  std::optional<PdcpSn> take_delivered(Seconds now);

  std::optional<PdcpSn> highest_tx_sn() const noexcept { return highest_tx_sn_; }
  bool empty() const noexcept { return sdus_.empty(); }
  std::size_t size() const noexcept { return sdus_.size(); }
  double backlog_bytes() const noexcept { return backlog_; }
  /// Full sizes of the SDUs still queued, partially sent ones included.
  ByteCount standing_bytes() const noexcept { return standing_bytes_; }
  const RlcSdu* head() const noexcept { return sdus_.empty() ? nullptr : &sdus_.front(); }
  const DrbConfig& drb() const noexcept { return drb_; }

  /// offered == transmitted + standing + dropped at all times.
  ByteCount offered_bytes() const noexcept { return offered_bytes_; }
  ByteCount transmitted_bytes() const noexcept { return transmitted_bytes_; }
  ByteCount dropped_bytes() const noexcept { return dropped_bytes_; }
  std::uint64_t dropped_sdus() const noexcept { return dropped_sdus_; }

 private:
  DrbConfig drb_;
  std::deque<RlcSdu> sdus_;
  double backlog_ = 0.0;
  std::optional<PdcpSn> highest_tx_sn_;
  Seconds last_release_ = 0.0;
  std::deque<std::pair<PdcpSn, Seconds>> awaiting_report_;
  ByteCount standing_bytes_ = 0;
  ByteCount offered_bytes_ = 0;
  ByteCount transmitted_bytes_ = 0;
  ByteCount dropped_bytes_ = 0;
  std::uint64_t dropped_sdus_ = 0;
};

}  // namespace l4span
