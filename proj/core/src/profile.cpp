#include "l4span/profile.hpp"

#include <algorithm>
#include <string>

#include "l4span/errors.hpp"

namespace l4span {

Seconds predict_sojourn(ByteCount n_queue, BytesPerSec r_hat) noexcept {
  if (n_queue == 0) return 0.0;
  if (r_hat <= 0.0) return std::numeric_limits<Seconds>::infinity();
  return static_cast<double>(n_queue) / r_hat;
}

ProfileTable::ProfileTable(DrbConfig drb, Seconds window_secs)
    : drb_(drb), window_(window_secs) {
  if (!(window_secs > 0.0)) {
    throw DomainError("estimation window must be positive");
  }
}

void ProfileTable::record_ingress(PdcpSn sn, std::uint32_t size_bytes,
                                  Seconds now) {
  if (last_sn_ && sn <= *last_sn_) {
    throw ProtocolError("PDCP SN " + std::to_string(sn) +
                        " not above previous " + std::to_string(*last_sn_));
  }
  if (size_bytes == 0) {
    throw DomainError("profile entry must have a positive size");
  }
  rows_.push_back(Row{ProfileEntry{sn, size_bytes, now, std::nullopt, std::nullopt}});
  last_sn_ = sn;
  queued_bytes_ += size_bytes;
  ingressed_bytes_ += size_bytes;
}

std::vector<ProfileEntry> ProfileTable::on_f1u_feedback(
    PdcpSn highest_tx_sn, std::optional<PdcpSn> highest_dlv_sn, Seconds now) {
  if (highest_tx_sn_ && highest_tx_sn < *highest_tx_sn_) {
    throw ProtocolError("transmitted SN regressed from " +
                        std::to_string(*highest_tx_sn_) + " to " +
                        std::to_string(highest_tx_sn));
  }
  if (!last_sn_ || highest_tx_sn > *last_sn_) {
    throw ProtocolError("feedback names SN " + std::to_string(highest_tx_sn) +
                        " that never entered the table");
  }
  if (highest_dlv_sn) {
    if (drb_.rlc_mode == RlcMode::UM) {
      throw ProtocolError("delivery feedback on an RLC UM bearer");
    }
    if (*highest_dlv_sn > highest_tx_sn) {
      throw ProtocolError("delivered SN ahead of transmitted SN");
    }
    if (highest_dlv_sn_ && *highest_dlv_sn < *highest_dlv_sn_) {
      throw ProtocolError("delivered SN regressed");
    }
  }

  std::vector<ProfileEntry> newly;
  const std::size_t start = first_pending_;
  while (first_pending_ < rows_.size() &&
         rows_[first_pending_].entry.pdcp_sn <= highest_tx_sn) {
    auto& e = rows_[first_pending_].entry;
    e.t_transmit = now;
    queued_bytes_ -= e.size_bytes;
    transmitted_bytes_ += e.size_bytes;
    ++first_pending_;
  }
  if (first_pending_ > start) {
    const BytesPerSec rate = window_sum_rate(first_pending_ - 1, now);
    newly.reserve(first_pending_ - start);
    for (std::size_t i = start; i < first_pending_; ++i) {
      rows_[i].instant_rate = rate;
      newly.push_back(rows_[i].entry);
    }
  }
  highest_tx_sn_ = highest_tx_sn;

  if (highest_dlv_sn) {
    while (first_undelivered_ < first_pending_ &&
           rows_[first_undelivered_].entry.pdcp_sn <= *highest_dlv_sn) {
      rows_[first_undelivered_].entry.t_deliver = now;
      ++first_undelivered_;
    }
    highest_dlv_sn_ = highest_dlv_sn;
  }
  return newly;
}

BytesPerSec ProfileTable::window_sum_rate(std::size_t last_tx,
                                          Seconds t_end) const noexcept {
  const Seconds lower = t_end - window_;
  ByteCount bytes = 0;
  for (std::size_t i = last_tx + 1; i-- > 0;) {
    const auto& e = rows_[i].entry;
    if (!(*e.t_transmit > lower)) break;
    bytes += e.size_bytes;
  }
  return static_cast<double>(bytes) / window_;
}

std::size_t ProfileTable::index_of(PdcpSn sn) const noexcept {
  auto it = std::lower_bound(
      rows_.begin(), rows_.end(), sn,
      [](const Row& r, PdcpSn v) { return r.entry.pdcp_sn < v; });
  if (it == rows_.end() || it->entry.pdcp_sn != sn) return rows_.size();
  return static_cast<std::size_t>(it - rows_.begin());
}

const ProfileEntry* ProfileTable::find(PdcpSn sn) const noexcept {
  const auto i = index_of(sn);
  return i == rows_.size() ? nullptr : &rows_[i].entry;
}

BytesPerSec ProfileTable::egress_rate_instant(PdcpSn sn) const {
  const auto i = index_of(sn);
  if (i == rows_.size()) {
    throw NotFoundError("no profile entry for SN " + std::to_string(sn));
  }
  if (!rows_[i].entry.t_transmit) {
    throw InvalidOperation("SN " + std::to_string(sn) + " not transmitted yet");
  }
  return rows_[i].instant_rate;
}

std::optional<EgressEstimate> ProfileTable::egress_rate_smoothed() const {
  if (first_pending_ == 0) return std::nullopt;
  const std::size_t k = first_pending_ - 1;
  const Seconds t_k = *rows_[k].entry.t_transmit;
  const Seconds lower = t_k - window_;

  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = k + 1; i-- > 0;) {
    if (!(*rows_[i].entry.t_transmit > lower)) break;
    sum += rows_[i].instant_rate;
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  if (n >= 2) {
    for (std::size_t i = k + 1, seen = 0; seen < n; ++seen) {
      --i;
      const double d = rows_[i].instant_rate - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
  }

  EgressEstimate est;
  est.r_hat = mean;
  est.e_hat = std::sqrt(var);
  est.n_queue = queued_bytes_;
  est.sojourn_hat = predict_sojourn(queued_bytes_, mean);
  est.at = t_k;
  est.sample_count = n;
  return est;
}

void ProfileTable::gc_delivered(Seconds keep_horizon, Seconds now) {
  const Seconds cutoff = now - keep_horizon;
  const bool am = drb_.rlc_mode == RlcMode::AM;
  while (!rows_.empty() && first_pending_ > 1) {
    const auto& e = rows_.front().entry;
    const std::optional<Seconds> done = am ? e.t_deliver : e.t_transmit;
    if (!done || !(*done < cutoff)) break;
    rows_.pop_front();
    --first_pending_;
    if (first_undelivered_ > 0) --first_undelivered_;
  }
}

std::optional<Seconds> ProfileTable::oldest_pending_ingress() const noexcept {
  if (first_pending_ >= rows_.size()) return std::nullopt;
  return rows_[first_pending_].entry.t_ingress;
}

std::optional<Seconds> ProfileTable::newest_ingress() const noexcept {
  if (rows_.empty()) return std::nullopt;
  return rows_.back().entry.t_ingress;
}

}  // namespace l4span
