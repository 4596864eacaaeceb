#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "l4span/types.hpp"

namespace l4span {

/// What one ACK told the congestion controller.
struct AckSample {
  ByteCount acked_bytes = 0;  // newly cumulatively acked
  ByteCount ce_bytes = 0;     // of those, reported CE (byte-counting feedback)
  bool ce_event = false;      // any congestion echo on this ACK
  bool loss = false;          // a loss was detected on this ACK
  Seconds now = 0.0;
  Seconds rtt = 0.0;          // sample carried by this ACK, 0 if none
  bool cwnd_limited = true;   // the window, not the app or rwnd, bounded sending
};

enum class CcPhase : std::uint8_t { SlowStart, CongestionAvoidance };

/// Window-based congestion controller. Windows are in payload bytes.
class CongestionControl {
 public:
  explicit CongestionControl(std::uint32_t smss, double initial_segments = 10.0);
  virtual ~CongestionControl() = default;

  virtual std::string_view name() const noexcept = 0;
  virtual void on_ack(const AckSample& s) = 0;
  /// Retransmission timeout: back to slow start from the floor window.
  virtual void on_rto(Seconds now);

  void set_srtt(Seconds srtt) noexcept { srtt_ = srtt; }
  double cwnd() const noexcept { return cwnd_; }
  double ssthresh() const noexcept { return ssthresh_; }
  CcPhase phase() const noexcept { return phase_; }
  std::uint32_t smss() const noexcept { return smss_; }
  Seconds srtt() const noexcept { return srtt_; }
  std::uint64_t cuts() const noexcept { return cuts_; }
  std::optional<Seconds> last_cut() const noexcept { return last_cut_; }
  double floor() const noexcept { return 2.0 * smss_; }

 protected:
  /// One cut per RTT: false while the previous cut is younger than srtt.
  bool may_cut(Seconds now) const noexcept;
  void record_cut(Seconds now) noexcept;
  /// No growth unless the window is what limits sending.
  void grow_reno(const AckSample& s) noexcept;

  std::uint32_t smss_;
  double cwnd_;
  double ssthresh_;
  CcPhase phase_ = CcPhase::SlowStart;
  Seconds srtt_ = 0.1;
  std::optional<Seconds> last_cut_;
  std::uint64_t cuts_ = 0;
};

/// DCTCP-style scalable controller: EWMA of the CE byte fraction per RTT,
/// proportional decrease (1 - alpha/2) at the round boundary.
class PragueCc final : public CongestionControl {
 public:
  struct Params {
    double g = 1.0 / 16.0;
    double initial_alpha = 1.0;
  };
  PragueCc(std::uint32_t smss, Params params, double initial_segments = 10.0);
  explicit PragueCc(std::uint32_t smss) : PragueCc(smss, Params{}) {}

  std::string_view name() const noexcept override { return "prague"; }
  void on_ack(const AckSample& s) override;

  double alpha() const noexcept { return alpha_; }
  void set_alpha(double a) noexcept { alpha_ = a; }
  void set_cwnd(double cwnd) noexcept { cwnd_ = cwnd; }
  void force_phase(CcPhase p) noexcept { phase_ = p; }

 private:
  void end_round(Seconds now);

  Params params_;
  double alpha_;
  Seconds round_start_ = -1.0;
  ByteCount round_acked_ = 0;
  ByteCount round_ce_ = 0;
  bool round_loss_ = false;
};

class CubicCc final : public CongestionControl {
 public:
  struct Params {
    double c = 0.4;
    double beta = 0.7;
    bool tcp_friendly = true;
    bool hystart = true;  // delay-based slow-start exit
  };
  CubicCc(std::uint32_t smss, Params params, double initial_segments = 10.0);
  explicit CubicCc(std::uint32_t smss) : CubicCc(smss, Params{}) {}

  std::string_view name() const noexcept override { return "cubic"; }
  void on_ack(const AckSample& s) override;
  void on_rto(Seconds now) override;

  /// Window (bytes) the cubic curve prescribes `t` seconds into the epoch.
  double cubic_window(Seconds t) const noexcept;
  double w_max() const noexcept { return w_max_; }
  double k() const noexcept { return k_; }
  std::optional<Seconds> epoch_start() const noexcept { return epoch_start_; }
  void set_cwnd(double cwnd) noexcept { cwnd_ = cwnd; }

 private:
  void start_epoch(Seconds now);
  void hystart(const AckSample& s);

  Params params_;
  double w_max_ = 0.0;
  double k_ = 0.0;
  double w_est_ = 0.0;  // Reno-equivalent window for the friendly region
  std::optional<Seconds> epoch_start_;
  // HyStart: min RTT of the first samples of each round vs the path minimum
  Seconds min_rtt_ = 0.0;
  Seconds round_start_ = -1.0;
  Seconds round_min_ = 0.0;
  int round_samples_ = 0;
};

class RenoCc final : public CongestionControl {
 public:
  explicit RenoCc(std::uint32_t smss, double initial_segments = 10.0)
      : CongestionControl(smss, initial_segments) {}
  std::string_view name() const noexcept override { return "reno"; }
  void on_ack(const AckSample& s) override;
  void set_cwnd(double cwnd) noexcept { cwnd_ = cwnd; }
  void force_phase(CcPhase p) noexcept { phase_ = p; }
};

enum class CcKind : std::uint8_t { Prague, Cubic, Reno };
std::string_view to_string(CcKind k) noexcept;
std::unique_ptr<CongestionControl> make_cc(CcKind kind, std::uint32_t smss);

/// ECN negotiated on a TCP connection. Mirrors FeedbackMode at the ends.
enum class EcnFeedback : std::uint8_t { None, Classic, AccEcn };
std::string_view to_string(EcnFeedback f) noexcept;

/// TCP receiver: cumulative ACK per data segment, out-of-order buffering,
/// RFC 3168 ECE latch or AccECN counters.
class TcpReceiver {
 public:
  TcpReceiver() = default;

  /// Handles SYN or data; returns the ACK (SYN-ACK for a SYN).
  Packet on_segment(const Packet& pkt, std::uint64_t ack_id, Seconds now);

  EcnFeedback mode() const noexcept { return mode_; }
  std::uint32_t rcv_nxt() const noexcept { return rcv_nxt_; }
  ByteCount delivered_bytes() const noexcept { return rcv_nxt_; }
  std::uint64_t ce_pkts() const noexcept { return ce_pkts_; }
  const AccEcnFields& counters() const noexcept { return counters_; }
  bool ece() const noexcept { return ece_; }

 private:
  EcnFeedback mode_ = EcnFeedback::None;
  std::uint32_t rcv_nxt_ = 0;
  std::map<std::uint32_t, std::uint32_t> ooo_;  // seq -> len
  std::uint64_t ce_pkts_ = 0;
  AccEcnFields counters_{};
  bool ece_ = false;
};

struct TcpSenderConfig {
  std::uint32_t flow = 0;
  FiveTuple tuple{};
  std::uint32_t mss_bytes = 1500;     // full packet size
  CcKind cc = CcKind::Prague;
  EcnFeedback feedback = EcnFeedback::AccEcn;
  Seconds start = 0.0;
  Seconds stop = 0.0;                 // no new data after this
  ByteCount size_bytes = 0;           // 0 = unbounded
  ByteCount rwnd_bytes = 6u << 20;    // receive-window ceiling
  bool pacing = true;
};

/// Reliable TCP-like sender driving one CongestionControl.
///
/// Every ACK echoes the send time and sequence of the segment that
/// triggered it, which doubles as a one-block SACK: loss is declared for
/// an unacknowledged segment sent a reordering window before the newest
/// delivered one. An RTO backs this up.
class TcpSender {
 public:
  explicit TcpSender(TcpSenderConfig cfg);

  std::vector<Packet> start(Seconds now);
  std::vector<Packet> on_ack(const Packet& ack, Seconds now);
  std::vector<Packet> on_timer(Seconds now);
  std::optional<Seconds> next_timer() const noexcept;

  bool established() const noexcept { return established_; }
  bool finished() const noexcept { return finished_at_.has_value(); }
  std::optional<Seconds> finished_at() const noexcept { return finished_at_; }
  ByteCount acked_bytes() const noexcept { return snd_una_; }
  Seconds srtt() const noexcept { return srtt_; }
  Seconds min_rtt() const noexcept { return min_rtt_; }
  std::optional<Seconds> last_rtt_sample() const noexcept { return last_sample_; }
  const CongestionControl& cc() const noexcept { return *cc_; }
  CongestionControl& cc() noexcept { return *cc_; }
  const TcpSenderConfig& config() const noexcept { return cfg_; }
  std::uint64_t retransmissions() const noexcept { return retransmissions_; }
  std::uint64_t losses() const noexcept { return losses_; }
  /// CE signals seen on the most recent ACK (ACE delta, or 1 for ECE).
  std::uint32_t last_ce_signals() const noexcept { return last_ce_signals_; }
  std::uint64_t next_pkt_id() noexcept { return ++pkt_seq_; }

 private:
  struct Segment {
    std::uint32_t seq = 0;
    std::uint32_t len = 0;
    Seconds sent_at = 0.0;
    bool sacked = false;
    bool lost = false;
    bool retx = false;
  };

  Packet make_packet(std::uint32_t seq, std::uint32_t len, std::uint8_t flags,
                     Seconds now, bool retx);
  void pump(Seconds now, std::vector<Packet>& out);
  void retransmit_lost(Seconds now, double window, std::vector<Packet>& out);
  void rtt_sample(Seconds sample);
  bool more_data(Seconds now) const noexcept;
  Seconds rto() const noexcept;
  double pacing_rate() const noexcept;
  EcnCodepoint data_ecn() const noexcept;

  TcpSenderConfig cfg_;
  std::unique_ptr<CongestionControl> cc_;
  std::uint32_t smss_;
  bool established_ = false;
  bool syn_sent_ = false;
  Seconds syn_at_ = 0.0;
  std::optional<Seconds> finished_at_;

  std::uint32_t snd_una_ = 0;
  std::uint32_t snd_nxt_ = 0;
  std::deque<Segment> segs_;
  double pipe_ = 0.0;  // bytes neither acked, sacked nor declared lost

  Seconds srtt_ = 0.0;
  Seconds rttvar_ = 0.0;
  Seconds min_rtt_ = 0.0;
  std::optional<Seconds> last_sample_;
  Seconds next_send_ = 0.0;
  bool pacing_blocked_ = false;
  bool cwnd_limited_ = false;
  Seconds rto_deadline_ = 0.0;
  int rto_backoff_ = 0;

  bool cwr_pending_ = false;
  std::uint8_t last_ace_ = 0;
  ByteCount last_ce_bytes_ = 0;
  ByteCount ce_credit_ = 0;
  std::uint32_t last_ce_signals_ = 0;

  std::uint64_t retransmissions_ = 0;
  std::uint64_t losses_ = 0;
  std::uint64_t pkt_seq_ = 0;
};

/// UDP flows: constant bit rate, or a rate-paced scalable controller fed
/// by in-payload CE counts.
enum class UdpMode : std::uint8_t { Cbr, Prague };

struct UdpSenderConfig {
  std::uint32_t flow = 0;
  FiveTuple tuple{};
  std::uint32_t packet_bytes = 1200;
  UdpMode mode = UdpMode::Cbr;
  BytesPerSec rate = 1e6;           // CBR rate, or Prague's starting rate
  EcnCodepoint ecn = EcnCodepoint::NotEct;
  Seconds start = 0.0;
  Seconds stop = 0.0;
};

class UdpSender {
 public:
  explicit UdpSender(UdpSenderConfig cfg);

  std::vector<Packet> on_timer(Seconds now);
  void on_feedback(const Packet& fb, Seconds now);
  std::optional<Seconds> next_timer() const noexcept;

  BytesPerSec rate() const noexcept;
  Seconds srtt() const noexcept { return srtt_; }
  std::optional<Seconds> last_rtt_sample() const noexcept { return last_sample_; }
  ByteCount sent_bytes() const noexcept { return sent_bytes_; }
  const UdpSenderConfig& config() const noexcept { return cfg_; }
  const PragueCc* cc() const noexcept { return cc_.get(); }
  std::uint32_t last_ce_signals() const noexcept { return last_ce_signals_; }

 private:
  UdpSenderConfig cfg_;
  std::unique_ptr<PragueCc> cc_;
  Seconds next_send_ = 0.0;
  Seconds srtt_ = 0.0;
  std::optional<Seconds> last_sample_;
  std::uint64_t sent_pkts_ = 0;
  ByteCount sent_bytes_ = 0;
  std::uint64_t fb_pkts_ = 0;
  std::uint64_t fb_ce_ = 0;
  std::uint32_t last_ce_signals_ = 0;
};

/// Counts received datagrams and answers each with a small feedback packet
/// carrying cumulative totals.
class UdpReceiver {
 public:
  std::optional<Packet> on_datagram(const Packet& pkt, bool send_feedback,
                                    std::uint64_t id, Seconds now);
  ByteCount delivered_bytes() const noexcept { return bytes_; }

 private:
  std::uint64_t pkts_ = 0;
  std::uint64_t ce_ = 0;
  ByteCount bytes_ = 0;
};

}  // namespace l4span
