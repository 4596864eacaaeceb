#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>

#include "l4span/marking.hpp"
#include "l4span/profile.hpp"
#include "l4span/shortcircuit.hpp"
#include "l4span/types.hpp"

namespace l4span {

/// Which rule turns the profile table into marks.
enum class AqmKind : std::uint8_t {
  None,         // bookkeeping only, never marks
  L4Span,
  DualPi2Step,  // wired baseline: tail ingress - head ingress > threshold
  Bernoulli,    // constant probability, for model checks
};
std::string_view to_string(AqmKind kind) noexcept;

struct LayerConfig {
  AqmKind aqm = AqmKind::L4Span;
  MarkParams params{};
  MarkingOptions marking{};
  Seconds coherence_time = kDefaultCoherenceTime;
  bool short_circuit = true;
  bool drop_fallback = false;
  Seconds step_threshold = 0.001;  // DualPi2Step
  double bernoulli_p = 0.0;        // Bernoulli
  Seconds gc_horizon = 0.1;

  void validate() const;
};

/// Wired-AQM sojourn proxy: true iff the queue spans more than `threshold`
/// between its head and tail ingress times.
bool dualpi2_step_mark(Seconds head_ingress, Seconds tail_ingress,
                       Seconds threshold) noexcept;

struct DrbKey {
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 1;
  friend auto operator<=>(const DrbKey&, const DrbKey&) = default;
};

struct DownlinkResult {
  MarkDecision decision = MarkDecision::Pass;
  std::optional<Packet> forward;  // nullopt when dropped
  std::optional<PdcpSn> pdcp_sn;
};

struct UplinkResult {
  Packet packet;
  std::optional<DrbKey> drb;  // nullopt for flows the layer never saw
  bool rewritten = false;
};

/// The CU-side marking layer: one profile table, marking state and RNG per
/// DRB, plus per-flow feedback state keyed by the downlink five-tuple.
class MarkingLayer {
 public:
  explicit MarkingLayer(LayerConfig config);

  void add_drb(const DrbConfig& drb);

  /// Downlink packet entering the CU for `drb`: classify, update flow state,
  /// decide, assign a PDCP SN and record ingress (unless dropped), and apply
  /// either tentative accounting or the IP-header fallback.
  DownlinkResult on_dl_pkt(const Packet& pkt, DrbKey drb, Seconds now);

  /// F1-U delivery status for `drb`. Returns the refreshed estimate.
  std::optional<EgressEstimate> on_ran_feedback(DrbKey drb, PdcpSn highest_tx_sn,
                                                std::optional<PdcpSn> highest_dlv_sn,
                                                Seconds now);

  /// Uplink packet: reverse-maps it to its downlink flow, learns the feedback
  /// mode from the first ACK, and rewrites it when short-circuiting.
  UplinkResult on_ul_packet(const Packet& pkt, Seconds now);

  const ProfileTable& profile(DrbKey drb) const;
  const DrbMarkState& mark_state(DrbKey drb) const;
  const FlowFeedbackState* flow_feedback(const FiveTuple& downlink) const;
  const LayerConfig& config() const noexcept { return config_; }

 private:
  struct Drb {
    Drb(const DrbConfig& cfg, const LayerConfig& layer, std::uint64_t seed);
    DrbConfig cfg;
    ProfileTable profile;
    DrbMarkState marks;
    MarkRng rng;
    PdcpSn next_sn = 1;
  };
  struct Flow {
    DrbKey drb;
    FlowFeedbackState feedback;
    bool mode_known = false;
  };

  Drb& drb_at(DrbKey key);
  const Drb& drb_at(DrbKey key) const;
  MarkDecision decide(Drb& drb, const Flow& flow, const Packet& pkt,
                      FlowClass cls, Seconds now);

  LayerConfig config_;
  std::map<DrbKey, std::unique_ptr<Drb>> drbs_;
  std::unordered_map<FiveTuple, Flow, FiveTupleHash> flows_;
};

}  // namespace l4span
