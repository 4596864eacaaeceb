#include "l4span/senders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "l4span/errors.hpp"

namespace l4span {

// ---------------------------------------------------------------- controllers

CongestionControl::CongestionControl(std::uint32_t smss, double initial_segments)
    : smss_(smss),
      cwnd_(initial_segments * smss),
      ssthresh_(std::numeric_limits<double>::infinity()) {
  if (smss == 0) throw DomainError("smss must be positive");
}

bool CongestionControl::may_cut(Seconds now) const noexcept {
  return !last_cut_ || now - *last_cut_ >= srtt_;
}

void CongestionControl::record_cut(Seconds now) noexcept {
  last_cut_ = now;
  ++cuts_;
  phase_ = CcPhase::CongestionAvoidance;
}

void CongestionControl::grow_reno(const AckSample& s) noexcept {
  if (!s.cwnd_limited) return;
  const ByteCount acked = s.acked_bytes;
  if (phase_ == CcPhase::SlowStart) {
    cwnd_ += static_cast<double>(acked);
    if (cwnd_ >= ssthresh_) phase_ = CcPhase::CongestionAvoidance;
  } else {
    cwnd_ += static_cast<double>(smss_) * static_cast<double>(acked) / cwnd_;
  }
}

void CongestionControl::on_rto(Seconds now) {
  ssthresh_ = std::max(cwnd_ / 2.0, floor());
  cwnd_ = floor();
  last_cut_ = now;
  ++cuts_;
  phase_ = CcPhase::SlowStart;
}

PragueCc::PragueCc(std::uint32_t smss, Params params, double initial_segments)
    : CongestionControl(smss, initial_segments),
      params_(params),
      alpha_(params.initial_alpha) {
  if (!(params.g > 0.0 && params.g <= 1.0)) {
    throw DomainError("prague gain must lie in (0, 1]");
  }
}

void PragueCc::on_ack(const AckSample& s) {
  if (round_start_ < 0.0) round_start_ = s.now;
  round_acked_ += s.acked_bytes;
  round_ce_ += std::min(s.ce_bytes, s.acked_bytes);
  round_loss_ = round_loss_ || s.loss;

  if (s.loss && may_cut(s.now)) {
    ssthresh_ = std::max(floor(), cwnd_ / 2.0);
    cwnd_ = ssthresh_;
    record_cut(s.now);
  } else if (!s.ce_event && !s.loss) {
    grow_reno(s);
  } else if (phase_ == CcPhase::SlowStart) {
    phase_ = CcPhase::CongestionAvoidance;
  }

  if (s.now - round_start_ >= srtt_) end_round(s.now);
}

void PragueCc::end_round(Seconds now) {
  if (round_acked_ > 0) {
    const double frac = std::clamp(
        static_cast<double>(round_ce_) / static_cast<double>(round_acked_), 0.0, 1.0);
    alpha_ = (1.0 - params_.g) * alpha_ + params_.g * frac;
    if (frac > 0.0 && may_cut(now)) {
      ssthresh_ = std::max(floor(), (1.0 - alpha_ / 2.0) * cwnd_);
      cwnd_ = ssthresh_;
      record_cut(now);
    }
  }
  round_start_ = now;
  round_acked_ = 0;
  round_ce_ = 0;
  round_loss_ = false;
}

CubicCc::CubicCc(std::uint32_t smss, Params params, double initial_segments)
    : CongestionControl(smss, initial_segments), params_(params) {
  if (!(params.beta > 0.0 && params.beta < 1.0) || !(params.c > 0.0)) {
    throw DomainError("cubic needs 0 < beta < 1 and C > 0");
  }
}

double CubicCc::cubic_window(Seconds t) const noexcept {
  const double d = t - k_;
  return (params_.c * d * d * d + w_max_ / smss_) * smss_;
}

void CubicCc::start_epoch(Seconds now) {
  epoch_start_ = now;
  if (cwnd_ < w_max_) {
    k_ = std::cbrt((w_max_ - cwnd_) / smss_ / params_.c);
  } else {
    k_ = 0.0;
    w_max_ = cwnd_;
  }
  w_est_ = cwnd_;
}

void CubicCc::on_ack(const AckSample& s) {
  if (s.ce_event || s.loss) {
    if (may_cut(s.now)) {
      w_max_ = cwnd_;
      cwnd_ = std::max(floor(), params_.beta * cwnd_);
      ssthresh_ = cwnd_;
      record_cut(s.now);
      epoch_start_ = s.now;
      k_ = std::cbrt(w_max_ / smss_ * (1.0 - params_.beta) / params_.c);
      w_est_ = cwnd_;
    }
    return;
  }
  if (phase_ == CcPhase::SlowStart) {
    grow_reno(s);
    if (params_.hystart) hystart(s);
    return;
  }
  if (!epoch_start_) start_epoch(s.now);
  if (!s.cwnd_limited) return;

  const double acked = static_cast<double>(s.acked_bytes);
  const double target =
      std::min(cubic_window(s.now - *epoch_start_ + srtt_), 1.5 * cwnd_);
  if (target > cwnd_) {
    cwnd_ += (target - cwnd_) * acked / cwnd_;
  } else {
    cwnd_ += 0.01 * smss_ * acked / cwnd_;
  }
  if (params_.tcp_friendly) {
    const double b = params_.beta;
    w_est_ += 3.0 * (1.0 - b) / (1.0 + b) * smss_ * acked / cwnd_;
    cwnd_ = std::max(cwnd_, w_est_);
  }
}

void CubicCc::hystart(const AckSample& s) {
  constexpr int kSamples = 8;
  constexpr double kLowWindowSegs = 16.0;
  if (s.rtt <= 0.0) return;
  min_rtt_ = min_rtt_ > 0.0 ? std::min(min_rtt_, s.rtt) : s.rtt;
  if (round_start_ < 0.0 || s.now - round_start_ >= srtt_) {
    round_start_ = s.now;
    round_min_ = std::numeric_limits<double>::infinity();
    round_samples_ = 0;
  }
  if (round_samples_ >= kSamples) return;
  round_min_ = std::min(round_min_, s.rtt);
  if (++round_samples_ < kSamples || cwnd_ < kLowWindowSegs * smss_) return;
  const Seconds thresh = std::clamp(min_rtt_ / 8.0, 0.004, 0.016);
  if (round_min_ >= min_rtt_ + thresh) {
    ssthresh_ = cwnd_;
    phase_ = CcPhase::CongestionAvoidance;
  }
}

void CubicCc::on_rto(Seconds now) {
  w_max_ = cwnd_;
  CongestionControl::on_rto(now);
  epoch_start_.reset();
}

void RenoCc::on_ack(const AckSample& s) {
  if (s.ce_event || s.loss) {
    if (may_cut(s.now)) {
      ssthresh_ = std::max(floor(), cwnd_ / 2.0);
      cwnd_ = ssthresh_;
      record_cut(s.now);
    }
    return;
  }
  grow_reno(s);
}

std::string_view to_string(CcKind k) noexcept {
  switch (k) {
    case CcKind::Prague: return "prague";
    case CcKind::Cubic: return "cubic";
    case CcKind::Reno: return "reno";
  }
  return "?";
}

std::unique_ptr<CongestionControl> make_cc(CcKind kind, std::uint32_t smss) {
  switch (kind) {
    case CcKind::Prague: return std::make_unique<PragueCc>(smss);
    case CcKind::Cubic: return std::make_unique<CubicCc>(smss);
    case CcKind::Reno: return std::make_unique<RenoCc>(smss);
  }
  throw DomainError("unknown congestion control");
}

std::string_view to_string(EcnFeedback f) noexcept {
  switch (f) {
    case EcnFeedback::None: return "none";
    case EcnFeedback::Classic: return "classic";
    case EcnFeedback::AccEcn: return "accecn";
  }
  return "?";
}

// ------------------------------------------------------------------ receiver

Packet TcpReceiver::on_segment(const Packet& pkt, std::uint64_t ack_id, Seconds now) {
  if (!pkt.tcp) throw ProtocolError("TCP receiver got a segment without a header");
  const auto& tcp = *pkt.tcp;

  Packet ack;
  ack.pkt_id = ack_id;
  ack.five_tuple = reverse_tuple(pkt.five_tuple);
  ack.size_bytes = kTcpHeaderFloor;
  ack.direction = pkt.direction == Direction::Downlink ? Direction::Uplink
                                                       : Direction::Downlink;
  ack.created_at = now;
  ack.trace.flow = pkt.trace.flow;
  ack.trace.sent_at = now;
  ack.trace.echo_sent_at = pkt.trace.sent_at;
  ack.trace.echo_seq = tcp.seq;
  TcpFields out;
  out.flags = tcp_flag::kAck;

  if (tcp.has(tcp_flag::kSyn)) {
    if (tcp.accecn) {
      mode_ = EcnFeedback::AccEcn;
    } else if (tcp.has(tcp_flag::kEce) && tcp.has(tcp_flag::kCwr)) {
      mode_ = EcnFeedback::Classic;
    } else {
      mode_ = EcnFeedback::None;
    }
    out.flags |= tcp_flag::kSyn;
    if (mode_ == EcnFeedback::AccEcn) out.accecn = AccEcnFields{};
    if (mode_ == EcnFeedback::Classic) out.set(tcp_flag::kEce, true);
    out.ack_no = rcv_nxt_;
    ack.tcp = out;
    return ack;
  }

  const std::uint32_t len = pkt.payload_bytes();
  switch (pkt.ecn) {
    case EcnCodepoint::Ce:
      ++ce_pkts_;
      counters_.ce_bytes += len;
      break;
    case EcnCodepoint::Ect1: counters_.ect1_bytes += len; break;
    case EcnCodepoint::Ect0: counters_.ect0_bytes += len; break;
    case EcnCodepoint::NotEct: break;
  }
  if (mode_ == EcnFeedback::Classic) {
    if (tcp.has(tcp_flag::kCwr)) ece_ = false;
    if (pkt.ecn == EcnCodepoint::Ce) ece_ = true;
  }

  if (len > 0) {
    if (tcp.seq == rcv_nxt_) {
      rcv_nxt_ += len;
      for (auto it = ooo_.begin(); it != ooo_.end() && it->first <= rcv_nxt_;) {
        rcv_nxt_ = std::max(rcv_nxt_, it->first + it->second);
        it = ooo_.erase(it);
      }
    } else if (static_cast<std::int32_t>(tcp.seq - rcv_nxt_) > 0) {
      ooo_.emplace(tcp.seq, len);
    }
  }

  out.ack_no = rcv_nxt_;
  if (mode_ == EcnFeedback::Classic) out.set(tcp_flag::kEce, ece_);
  if (mode_ == EcnFeedback::AccEcn) {
    counters_.ace_counter = static_cast<std::uint8_t>(ce_pkts_ % 8);
    out.accecn = counters_;
  }
  ack.tcp = out;
  return ack;
}

// -------------------------------------------------------------------- sender

TcpSender::TcpSender(TcpSenderConfig cfg)
    : cfg_(cfg), cc_(make_cc(cfg.cc, cfg.mss_bytes - kTcpHeaderFloor)),
      smss_(cfg.mss_bytes - kTcpHeaderFloor) {
  if (cfg.mss_bytes <= kTcpHeaderFloor) {
    throw DomainError("mss must exceed the TCP header");
  }
}

EcnCodepoint TcpSender::data_ecn() const noexcept {
  if (cfg_.feedback == EcnFeedback::None) return EcnCodepoint::NotEct;
  return cfg_.cc == CcKind::Prague ? EcnCodepoint::Ect1 : EcnCodepoint::Ect0;
}

Packet TcpSender::make_packet(std::uint32_t seq, std::uint32_t len,
                              std::uint8_t flags, Seconds now, bool retx) {
  Packet p;
  p.pkt_id = next_pkt_id();
  p.five_tuple = cfg_.tuple;
  p.size_bytes = len + kTcpHeaderFloor;
  p.ecn = len > 0 ? data_ecn() : EcnCodepoint::NotEct;
  p.direction = Direction::Downlink;
  p.created_at = now;
  TcpFields tcp;
  tcp.seq = seq;
  tcp.flags = flags;
  if (len > 0 && cwr_pending_) {
    tcp.set(tcp_flag::kCwr, true);
    cwr_pending_ = false;
  }
  p.tcp = tcp;
  p.trace.flow = cfg_.flow;
  p.trace.sent_at = now;
  p.trace.payload = len;
  p.trace.retransmission = retx;
  return p;
}

std::vector<Packet> TcpSender::start(Seconds now) {
  std::vector<Packet> out;
  auto syn = make_packet(0, 0, tcp_flag::kSyn, now, false);
  if (cfg_.feedback == EcnFeedback::AccEcn) syn.tcp->accecn = AccEcnFields{};
  if (cfg_.feedback == EcnFeedback::Classic) {
    syn.tcp->set(tcp_flag::kEce, true);
    syn.tcp->set(tcp_flag::kCwr, true);
  }
  syn_sent_ = true;
  syn_at_ = now;
  rto_deadline_ = now + 1.0;
  out.push_back(syn);
  return out;
}

bool TcpSender::more_data(Seconds now) const noexcept {
  if (cfg_.stop > 0.0 && now >= cfg_.stop) return false;
  return cfg_.size_bytes == 0 || snd_nxt_ < cfg_.size_bytes;
}

Seconds TcpSender::rto() const noexcept {
  const Seconds base = std::max(0.2, srtt_ + 4.0 * rttvar_);
  return std::min(60.0, base * static_cast<double>(1 << std::min(rto_backoff_, 8)));
}

double TcpSender::pacing_rate() const noexcept {
  if (srtt_ <= 0.0) return std::numeric_limits<double>::infinity();
  const double gain = cc_->phase() == CcPhase::SlowStart ? 2.0 : 1.2;
  return gain * cc_->cwnd() / srtt_;
}

void TcpSender::rtt_sample(Seconds s) {
  if (s <= 0.0) return;
  if (srtt_ == 0.0) {
    srtt_ = s;
    rttvar_ = s / 2.0;
    min_rtt_ = s;
  } else {
    rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - s);
    srtt_ = 0.875 * srtt_ + 0.125 * s;
    min_rtt_ = std::min(min_rtt_, s);
  }
  last_sample_ = s;
  cc_->set_srtt(srtt_);
}

void TcpSender::retransmit_lost(Seconds now, double window, std::vector<Packet>& out) {
  for (auto& seg : segs_) {
    if (!seg.lost || seg.sacked) continue;
    if (pipe_ > 0.0 && pipe_ + seg.len > window) break;
    seg.lost = false;
    seg.retx = true;
    seg.sent_at = now;
    pipe_ += seg.len;
    ++retransmissions_;
    out.push_back(make_packet(seg.seq, seg.len, tcp_flag::kAck, now, true));
  }
}

void TcpSender::pump(Seconds now, std::vector<Packet>& out) {
  pacing_blocked_ = false;
  if (!established_) return;
  const double window = std::min(cc_->cwnd(), static_cast<double>(cfg_.rwnd_bytes));
  retransmit_lost(now, window, out);
  cwnd_limited_ = false;
  while (more_data(now)) {
    std::uint32_t len = smss_;
    if (cfg_.size_bytes > 0) {
      len = static_cast<std::uint32_t>(
          std::min<ByteCount>(smss_, cfg_.size_bytes - snd_nxt_));
    }
    if (pipe_ > 0.0 && pipe_ + len > window) {
      cwnd_limited_ = cc_->cwnd() <= static_cast<double>(cfg_.rwnd_bytes);
      break;
    }
    if (cfg_.pacing && now + 1e-12 < next_send_) {
      pacing_blocked_ = true;
      cwnd_limited_ = cc_->cwnd() <= static_cast<double>(cfg_.rwnd_bytes);
      break;
    }
    if (snd_nxt_ > std::numeric_limits<std::uint32_t>::max() - len) {
      throw InvalidOperation("flow " + std::to_string(cfg_.flow) +
                             " exhausted the 32-bit sequence space");
    }
    if (segs_.empty()) rto_deadline_ = now + rto();
    segs_.push_back(Segment{snd_nxt_, len, now});
    pipe_ += len;
    out.push_back(make_packet(snd_nxt_, len, tcp_flag::kAck, now, false));
    snd_nxt_ += len;
    if (cfg_.pacing) {
      next_send_ = std::max(next_send_, now) + (len + kTcpHeaderFloor) / pacing_rate();
    }
  }
}

std::vector<Packet> TcpSender::on_ack(const Packet& ack, Seconds now) {
  std::vector<Packet> out;
  last_ce_signals_ = 0;
  if (!ack.tcp) return out;
  const auto& tcp = *ack.tcp;

  if (!established_) {
    if (!tcp.has(tcp_flag::kSyn)) return out;
    established_ = true;
    rto_deadline_ = 0.0;
    rtt_sample(now - syn_at_);
    if (cfg_.feedback == EcnFeedback::AccEcn && !tcp.accecn) {
      cfg_.feedback = tcp.has(tcp_flag::kEce) ? EcnFeedback::Classic : EcnFeedback::None;
    } else if (cfg_.feedback == EcnFeedback::Classic && !tcp.has(tcp_flag::kEce)) {
      cfg_.feedback = EcnFeedback::None;
    }
    next_send_ = now;
    pump(now, out);
    return out;
  }

  rtt_sample(now - ack.trace.echo_sent_at);

  // the echoed segment arrived: a one-block SACK
  auto seg_it = std::lower_bound(
      segs_.begin(), segs_.end(), ack.trace.echo_seq,
      [](const Segment& s, std::uint32_t v) { return s.seq < v; });
  if (seg_it != segs_.end() && seg_it->seq == ack.trace.echo_seq && !seg_it->sacked) {
    if (!seg_it->lost) pipe_ -= seg_it->len;
    seg_it->sacked = true;
    seg_it->lost = false;
  }

  ByteCount newly = 0;
  const auto diff = static_cast<std::int32_t>(tcp.ack_no - snd_una_);
  if (diff > 0) {
    newly = static_cast<ByteCount>(diff);
    while (!segs_.empty() &&
           static_cast<std::int32_t>(segs_.front().seq + segs_.front().len - tcp.ack_no) <= 0) {
      const auto& s = segs_.front();
      if (!s.sacked && !s.lost) pipe_ -= s.len;
      segs_.pop_front();
    }
    snd_una_ = tcp.ack_no;
    rto_backoff_ = 0;
    rto_deadline_ = segs_.empty() ? 0.0 : now + rto();
  }
  if (segs_.empty()) pipe_ = 0.0;

  // segments sent a reordering window before the newest delivered one
  bool loss = false;
  if (static_cast<std::int32_t>(ack.trace.echo_seq - snd_una_) > 0) {
    const Seconds reo = std::max(min_rtt_ / 4.0, 0.001);
    for (auto& s : segs_) {
      if (static_cast<std::int32_t>(s.seq - ack.trace.echo_seq) >= 0) break;
      if (s.sacked || s.lost) continue;
      if (s.sent_at + reo < ack.trace.echo_sent_at) {
        s.lost = true;
        pipe_ -= s.len;
        ++losses_;
        loss = true;
      }
    }
  }

  AckSample sample;
  sample.now = now;
  sample.acked_bytes = newly;
  sample.loss = loss;
  sample.rtt = now - ack.trace.echo_sent_at;
  // inflight near the window counts too, so a drained ACK clock still grows
  sample.cwnd_limited = cwnd_limited_ || pipe_ + 2.0 * smss_ >= cc_->cwnd();
  if (cfg_.feedback == EcnFeedback::AccEcn && tcp.accecn) {
    const auto& acc = *tcp.accecn;
    const auto ace_delta = static_cast<std::uint8_t>((acc.ace_counter - last_ace_) & 7);
    last_ace_ = acc.ace_counter;
    const ByteCount ce_delta = acc.ce_bytes > last_ce_bytes_ ? acc.ce_bytes - last_ce_bytes_ : 0;
    last_ce_bytes_ = std::max(last_ce_bytes_, acc.ce_bytes);
    ce_credit_ += ce_delta;
    const ByteCount credited = std::min(ce_credit_, newly);
    ce_credit_ -= credited;
    sample.ce_bytes = credited;
    sample.ce_event = ace_delta > 0 || ce_delta > 0;
    last_ce_signals_ = ace_delta;
  } else if (cfg_.feedback == EcnFeedback::Classic) {
    sample.ce_event = tcp.has(tcp_flag::kEce);
    last_ce_signals_ = sample.ce_event ? 1 : 0;
  }

  if (newly > 0 || sample.ce_event || loss) {
    const auto cuts_before = cc_->cuts();
    cc_->on_ack(sample);
    if (cfg_.feedback == EcnFeedback::Classic && sample.ce_event &&
        cc_->cuts() > cuts_before) {
      cwr_pending_ = true;
    }
  }

  if (cfg_.size_bytes > 0 && snd_una_ >= cfg_.size_bytes && !finished_at_) {
    finished_at_ = now;
  }
  pump(now, out);
  return out;
}

std::vector<Packet> TcpSender::on_timer(Seconds now) {
  std::vector<Packet> out;
  if (!established_) {
    if (syn_sent_ && now >= rto_deadline_) {
      auto again = start(now);
      ++rto_backoff_;
      rto_deadline_ = now + rto();
      out = std::move(again);
    }
    return out;
  }
  if (rto_deadline_ > 0.0 && now >= rto_deadline_ && !segs_.empty()) {
    for (auto& s : segs_) {
      if (!s.sacked && !s.lost) {
        s.lost = true;
        pipe_ -= s.len;
      }
    }
    ++losses_;
    cc_->on_rto(now);
    ++rto_backoff_;
    rto_deadline_ = now + rto();
  } else if (rto_deadline_ > 0.0 && now >= rto_deadline_) {
    rto_deadline_ = 0.0;
  }
  pump(now, out);
  return out;
}

std::optional<Seconds> TcpSender::next_timer() const noexcept {
  std::optional<Seconds> t;
  if (rto_deadline_ > 0.0) t = rto_deadline_;
  if (pacing_blocked_) t = t ? std::min(*t, next_send_) : next_send_;
  return t;
}

// ----------------------------------------------------------------------- UDP

UdpSender::UdpSender(UdpSenderConfig cfg) : cfg_(cfg), next_send_(cfg.start) {
  if (cfg.packet_bytes <= kUdpHeaderFloor) {
    throw DomainError("UDP packet must exceed its header");
  }
  if (!(cfg.rate > 0.0)) throw DomainError("UDP rate must be positive");
  if (cfg_.mode == UdpMode::Prague) {
    cc_ = std::make_unique<PragueCc>(cfg.packet_bytes);
    if (cfg_.ecn == EcnCodepoint::NotEct) cfg_.ecn = EcnCodepoint::Ect1;
  }
}

BytesPerSec UdpSender::rate() const noexcept {
  if (!cc_ || srtt_ <= 0.0) return cfg_.rate;
  return std::max(cc_->cwnd() / srtt_, 2.0 * cfg_.packet_bytes / srtt_);
}

std::vector<Packet> UdpSender::on_timer(Seconds now) {
  std::vector<Packet> out;
  if (now < cfg_.start) return out;
  while (next_send_ <= now + 1e-12) {
    if (cfg_.stop > 0.0 && next_send_ >= cfg_.stop) break;
    Packet p;
    p.pkt_id = ++sent_pkts_;
    p.five_tuple = cfg_.tuple;
    p.size_bytes = cfg_.packet_bytes;
    p.ecn = cfg_.ecn;
    p.direction = Direction::Downlink;
    p.created_at = now;
    p.trace.flow = cfg_.flow;
    p.trace.sent_at = now;
    p.trace.payload = cfg_.packet_bytes - kUdpHeaderFloor;
    sent_bytes_ += p.size_bytes;
    out.push_back(p);
    next_send_ = std::max(next_send_, now - 0.01) + cfg_.packet_bytes / rate();
  }
  return out;
}

std::optional<Seconds> UdpSender::next_timer() const noexcept {
  if (cfg_.stop > 0.0 && next_send_ >= cfg_.stop) return std::nullopt;
  return next_send_;
}

void UdpSender::on_feedback(const Packet& fb, Seconds now) {
  last_ce_signals_ = 0;
  const Seconds s = now - fb.trace.echo_sent_at;
  if (s > 0.0) {
    bool first = srtt_ == 0.0;
    srtt_ = first ? s : 0.875 * srtt_ + 0.125 * s;
    last_sample_ = s;
    if (cc_) {
      cc_->set_srtt(srtt_);
      if (first) cc_->set_cwnd(cfg_.rate * srtt_);
    }
  }
  if (fb.trace.udp_pkts <= fb_pkts_) return;
  const auto d_pkts = fb.trace.udp_pkts - fb_pkts_;
  const auto d_ce = fb.trace.udp_ce_pkts > fb_ce_ ? fb.trace.udp_ce_pkts - fb_ce_ : 0;
  fb_pkts_ = fb.trace.udp_pkts;
  fb_ce_ = std::max(fb_ce_, fb.trace.udp_ce_pkts);
  last_ce_signals_ = static_cast<std::uint32_t>(d_ce);
  if (cc_) {
    AckSample a;
    a.now = now;
    a.acked_bytes = d_pkts * cfg_.packet_bytes;
    a.ce_bytes = d_ce * cfg_.packet_bytes;
    a.ce_event = d_ce > 0;
    cc_->on_ack(a);
  }
}

std::optional<Packet> UdpReceiver::on_datagram(const Packet& pkt, bool send_feedback,
                                               std::uint64_t id, Seconds now) {
  ++pkts_;
  if (pkt.ecn == EcnCodepoint::Ce) ++ce_;
  bytes_ += pkt.payload_bytes();
  if (!send_feedback) return std::nullopt;
  Packet fb;
  fb.pkt_id = id;
  fb.five_tuple = reverse_tuple(pkt.five_tuple);
  fb.size_bytes = kUdpHeaderFloor + 16;
  fb.direction = Direction::Uplink;
  fb.created_at = now;
  fb.trace.flow = pkt.trace.flow;
  fb.trace.sent_at = now;
  fb.trace.echo_sent_at = pkt.trace.sent_at;
  fb.trace.udp_pkts = pkts_;
  fb.trace.udp_ce_pkts = ce_;
  return fb;
}

}  // namespace l4span
