#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <unordered_map>

#include "l4span/profile.hpp"
#include "l4span/types.hpp"

namespace l4span {

struct MarkParams {
  Seconds tau_thr = 0.010;        // sojourn threshold
  std::uint32_t mss_bytes = 1500;
  double beta = 0.5;              // classic multiplicative-decrease factor
  std::uint64_t rng_seed = 1;

  /// Throws DomainError unless 0 < beta < 1 and tau_thr > 0.
  void validate() const;
};

/// Response-function constant of a loss-based sender with MD factor beta:
/// ((1 + beta) / 2) * sqrt(2 / (1 - beta^2)).
double k_constant(double beta);

double standard_normal_cdf(double x) noexcept;

/// Probability that the real egress rate cannot drain `n_queue` bytes within
/// `tau_thr`, with the estimation error modelled as N(0, e_hat^2). With
/// e_hat == 0 this is a step at predicted sojourn == tau_thr.
double p_l4s(double n_queue, BytesPerSec r_hat, BytesPerSec e_hat,
             Seconds tau_thr) noexcept;

/// Marking probability that makes a classic sender's modelled throughput
/// match `r_hat`, clamped to 1. nullopt when RTT or rate is non-positive.
std::optional<double> p_classic(double mss, double k, Seconds rtt_hat,
                                BytesPerSec r_hat) noexcept;

/// Coupling coefficient between classic and L4S marking on a shared bearer.
/// Solves 2*MSS/(RTT*p_l4s) == MSS*K/(RTT*sqrt(p_classic)) for p_l4s.
inline double coupling_coefficient(double k) noexcept { return 2.0 / k; }

struct CoupledProbabilities {
  double p_l4s = 0.0;
  double p_classic = 0.0;
};

CoupledProbabilities coupled_probabilities(double p_classic, double k) noexcept;

/// Diagnostic cost of a mis-estimated egress rate under a fixed sojourn
/// threshold. Never used for control.
struct ErrorCost {
  Seconds rtt_inflation_secs = 0.0;
  BytesPerSec throughput_loss = 0.0;
};

ErrorCost error_cost_bounds(BytesPerSec r_e_true, BytesPerSec r_hat,
                            Seconds rt_p, Seconds tau_s);

enum class DrbMode : std::uint8_t { L4sOnly, ClassicOnly, Shared };
std::string_view to_string(DrbMode mode) noexcept;

enum class MarkDecision : std::uint8_t { Pass, MarkCe, TentativeMark, Drop };
std::string_view to_string(MarkDecision d) noexcept;

/// Which marking rule each class gets on a shared bearer. `Coupled` is the
/// default; the others exist to compare against it.
enum class SharedPolicy : std::uint8_t {
  Coupled,     // classic: rate-matching probability, L4S: coupled to it
  AllL4s,      // both classes use the L4S rule
  AllClassic,  // both classes use the classic rule
  Separate,    // each class keeps its single-class rule
};

/// How a positive marking decision reaches the sender for one packet.
struct MarkRoute {
  bool short_circuit = false;  // TCP flow whose ACKs we rewrite
  bool drop_fallback = false;  // non-ECN flows get drops
};

/// Maps a "congestion signal wanted" outcome onto the action for a flow.
MarkDecision positive_decision(FlowClass cls, MarkRoute route) noexcept;

/// Per-DRB Bernoulli source. Uses its own double construction so draws are
/// identical across standard libraries.
class MarkRng {
 public:
  explicit MarkRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  bool bernoulli(double p) noexcept {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

 private:
  std::mt19937_64 engine_;
};

struct MarkingOptions {
  SharedPolicy shared_policy = SharedPolicy::Coupled;
  bool force_zero_error = false;
  Seconds estimation_window = kDefaultEstimationWindow;
  Seconds flow_idle_timeout = 10.0;
};

/// Marking state of one DRB: the flow mix, per-flow handshake RTTs, and the
/// probabilities refreshed on every RAN feedback.
class DrbMarkState {
 public:
  DrbMarkState(MarkParams params, MarkingOptions options = {});

  /// Records a downlink packet's class (latest packet wins) and bytes, and
  /// tracks the SYN -> first forward packet interval for TCP flows.
  void observe_downlink(const Packet& pkt, FlowClass cls, Seconds now);

  /// Recomputes p_l4s / p_classic from a fresh estimate.
  void refresh(const EgressEstimate& est, Seconds now);

  /// RTT* + sojourn when the flow's handshake was seen, else 2 * sojourn.
  std::optional<Seconds> rtt_estimate(const FiveTuple& flow,
                                      Seconds sojourn_hat) const;

  /// Bearer-level RTT used for the classic probability: byte-weighted mean
  /// RTT* over active non-L4S flows plus the sojourn, falling back to
  /// 2 * sojourn.
  std::optional<Seconds> drb_rtt_estimate(Seconds sojourn_hat) const;

  /// Probability applied to a packet of class `cls` under the current mode.
  double probability_for(FlowClass cls) const noexcept;

  bool estimate_fresh(Seconds now) const noexcept;

  DrbMode mode() const noexcept { return mode_; }
  double p_l4s() const noexcept { return p_l4s_; }
  double p_classic() const noexcept { return p_classic_; }
  double p_l4s_coupled() const noexcept { return p_l4s_coupled_; }
  /// Byte threshold equivalent to tau_thr at the estimated egress rate.
  double n_l() const noexcept { return n_l_; }
  const std::optional<EgressEstimate>& last_estimate() const noexcept {
    return last_estimate_;
  }
  std::optional<Seconds> rtt_star(const FiveTuple& flow) const;
  const MarkParams& params() const noexcept { return params_; }
  const MarkingOptions& options() const noexcept { return options_; }
  std::size_t active_flows() const noexcept { return flows_.size(); }

 private:
  struct FlowInfo {
    FlowClass cls = FlowClass::NonEcn;
    Seconds last_seen = 0.0;
    ByteCount bytes = 0;
    std::optional<Seconds> syn_at;
    std::optional<Seconds> rtt_star;
  };

  void update_mode() noexcept;
  void forget_idle(Seconds now);

  MarkParams params_;
  MarkingOptions options_;
  double k_;
  std::unordered_map<FiveTuple, FlowInfo, FiveTupleHash> flows_;
  std::size_t l4s_flows_ = 0;
  std::size_t other_flows_ = 0;
  DrbMode mode_ = DrbMode::L4sOnly;
  std::optional<EgressEstimate> last_estimate_;
  double p_l4s_ = 0.0;
  double p_classic_ = 0.0;
  double p_l4s_coupled_ = 0.0;
  double n_l_ = 0.0;
  Seconds last_sweep_ = 0.0;
};

/// Per-packet marking decision. Stale or missing estimates give Pass, as do
/// zero-payload control segments.
MarkDecision decide_mark(const DrbMarkState& state, const Packet& pkt,
                         FlowClass flow_class, MarkRoute route, MarkRng& rng,
                         Seconds now);

}  // namespace l4span
