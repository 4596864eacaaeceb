#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "l4span/types.hpp"

namespace l4span {

/// Measured channel coherence time for a 3.5 GHz cell and a 70 km/h UE.
inline constexpr Seconds kDefaultCoherenceTime = 0.0249;
/// Egress-rate estimation window: half the coherence time.
inline constexpr Seconds kDefaultEstimationWindow = kDefaultCoherenceTime / 2;

/// One PDCP SDU's progress through the RLC: ingress at the CU, transmission
/// by the MAC, and (RLC AM only) delivery to the UE.
struct ProfileEntry {
  PdcpSn pdcp_sn = 0;
  std::uint32_t size_bytes = 0;
  Seconds t_ingress = 0.0;
  std::optional<Seconds> t_transmit;
  std::optional<Seconds> t_deliver;
};

/// Smoothed egress rate, its spread, and the predicted sojourn time of the
/// standing queue.
struct EgressEstimate {
  BytesPerSec r_hat = 0.0;
  BytesPerSec e_hat = 0.0;
  ByteCount n_queue = 0;
  Seconds sojourn_hat = 0.0;
  Seconds at = 0.0;
  std::size_t sample_count = 0;

  bool unbounded() const noexcept { return std::isinf(sojourn_hat); }
};

/// n_queue / r_hat, with 0 for an empty queue and +inf when nothing drains.
Seconds predict_sojourn(ByteCount n_queue, BytesPerSec r_hat) noexcept;

/// Per-DRB packet profile table.
///
/// Entries are kept in PDCP SN order. Transmission is in order, so the
/// transmitted entries always form a prefix of the table. Every entry's
/// instantaneous egress rate (the byte sum over the trailing window ending
/// at its transmit time, divided by the window) is computed once, when the
/// feedback covering it arrives; later feedback has a strictly later
/// timestamp and can never fall inside that window.
class ProfileTable {
 public:
  explicit ProfileTable(DrbConfig drb,
                        Seconds window_secs = kDefaultEstimationWindow);

  /// Appends a pending entry. Throws ProtocolError unless `sn` exceeds every
  /// SN seen so far.
  void record_ingress(PdcpSn sn, std::uint32_t size_bytes, Seconds now);

  /// Applies one F1-U delivery status message and returns the entries it
  /// newly marked as transmitted. Throws ProtocolError when the feedback
  /// regresses, names an SN never ingressed, or carries a delivered SN on a
  /// UM bearer.
  std::vector<ProfileEntry> on_f1u_feedback(PdcpSn highest_tx_sn,
                                            std::optional<PdcpSn> highest_dlv_sn,
                                            Seconds now);

  /// Instantaneous egress rate at entry `sn`. Throws NotFoundError if the
  /// entry is unknown (or evicted) and InvalidOperation if it is not yet
  /// transmitted.
  BytesPerSec egress_rate_instant(PdcpSn sn) const;

  /// Mean and population standard deviation of the instantaneous rates over
  /// the window ending at the highest transmitted entry. nullopt until
  /// something has been transmitted.
  std::optional<EgressEstimate> egress_rate_smoothed() const;

  /// Drops delivered (AM) or transmitted (UM) entries whose completion time
  /// is older than `now - keep_horizon`. The highest transmitted entry is
  /// always retained so the estimate stays anchored.
  void gc_delivered(Seconds keep_horizon, Seconds now);

  ByteCount queued_bytes() const noexcept { return queued_bytes_; }
  ByteCount ingressed_bytes() const noexcept { return ingressed_bytes_; }
  ByteCount transmitted_bytes() const noexcept { return transmitted_bytes_; }
  std::optional<PdcpSn> highest_tx_sn() const noexcept { return highest_tx_sn_; }
  std::optional<PdcpSn> highest_dlv_sn() const noexcept { return highest_dlv_sn_; }

  /// Ingress time of the oldest entry the CU believes is still queued.
  std::optional<Seconds> oldest_pending_ingress() const noexcept;
  std::optional<Seconds> newest_ingress() const noexcept;

  const ProfileEntry* find(PdcpSn sn) const noexcept;
  std::size_t size() const noexcept { return rows_.size(); }
  Seconds window() const noexcept { return window_; }
  const DrbConfig& drb() const noexcept { return drb_; }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& row : rows_) fn(row.entry);
  }

 private:
  struct Row {
    ProfileEntry entry;
    BytesPerSec instant_rate = 0.0;
  };

  std::size_t index_of(PdcpSn sn) const noexcept;
  BytesPerSec window_sum_rate(std::size_t last_tx, Seconds t_end) const noexcept;

  DrbConfig drb_;
  Seconds window_;
  std::deque<Row> rows_;
  std::size_t first_pending_ = 0;      // first row without t_transmit
  std::size_t first_undelivered_ = 0;  // first row without t_deliver (AM)
  std::optional<PdcpSn> last_sn_;
  std::optional<PdcpSn> highest_tx_sn_;
  std::optional<PdcpSn> highest_dlv_sn_;
  ByteCount queued_bytes_ = 0;
  ByteCount ingressed_bytes_ = 0;
  ByteCount transmitted_bytes_ = 0;
};

}  // namespace l4span
