#include "l4span/layer.hpp"

#include <string>

#include "l4span/errors.hpp"

namespace l4span {

std::string_view to_string(AqmKind kind) noexcept {
  switch (kind) {
    case AqmKind::None: return "none";
    case AqmKind::L4Span: return "l4span";
    case AqmKind::DualPi2Step: return "dualpi2_step";
    case AqmKind::Bernoulli: return "bernoulli";
  }
  return "?";
}

void LayerConfig::validate() const {
  params.validate();
  if (!(coherence_time > 0.0)) {
    throw DomainError("coherence_time must be positive");
  }
  if (!(step_threshold > 0.0)) {
    throw DomainError("step threshold must be positive");
  }
  if (!(bernoulli_p >= 0.0 && bernoulli_p <= 1.0)) {
    throw DomainError("bernoulli probability must lie in [0, 1]");
  }
  if (!(gc_horizon >= 0.0)) {
    throw DomainError("gc horizon must be non-negative");
  }
}

bool dualpi2_step_mark(Seconds head_ingress, Seconds tail_ingress,
                       Seconds threshold) noexcept {
  return tail_ingress - head_ingress > threshold;
}

namespace {

std::uint64_t drb_seed(std::uint64_t base, const DrbConfig& cfg) {
  std::uint64_t x = base ^ (std::uint64_t{cfg.ue_id} << 16) ^ cfg.drb_id;
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string key_name(DrbKey key) {
  return "ue " + std::to_string(key.ue_id) + " drb " + std::to_string(key.drb_id);
}

}  // namespace

MarkingLayer::Drb::Drb(const DrbConfig& c, const LayerConfig& layer,
                       std::uint64_t seed)
    : cfg(c),
      profile(c, layer.coherence_time / 2),
      marks([&] {
        MarkParams p = layer.params;
        p.mss_bytes = c.mss_bytes;
        return p;
      }(), [&] {
        MarkingOptions o = layer.marking;
        o.estimation_window = layer.coherence_time / 2;
        return o;
      }()),
      rng(seed) {}

MarkingLayer::MarkingLayer(LayerConfig config) : config_(config) {
  config_.validate();
}

void MarkingLayer::add_drb(const DrbConfig& drb) {
  drb.validate();
  const DrbKey key{drb.ue_id, drb.drb_id};
  if (drbs_.count(key)) {
    throw InvalidOperation("duplicate " + key_name(key));
  }
  drbs_.emplace(key, std::make_unique<Drb>(
                         drb, config_, drb_seed(config_.params.rng_seed, drb)));
}

MarkingLayer::Drb& MarkingLayer::drb_at(DrbKey key) {
  auto it = drbs_.find(key);
  if (it == drbs_.end()) throw NotFoundError("unknown " + key_name(key));
  return *it->second;
}

const MarkingLayer::Drb& MarkingLayer::drb_at(DrbKey key) const {
  auto it = drbs_.find(key);
  if (it == drbs_.end()) throw NotFoundError("unknown " + key_name(key));
  return *it->second;
}

const ProfileTable& MarkingLayer::profile(DrbKey drb) const {
  return drb_at(drb).profile;
}

const DrbMarkState& MarkingLayer::mark_state(DrbKey drb) const {
  return drb_at(drb).marks;
}

const FlowFeedbackState* MarkingLayer::flow_feedback(const FiveTuple& downlink) const {
  auto it = flows_.find(downlink);
  return it == flows_.end() ? nullptr : &it->second.feedback;
}

MarkDecision MarkingLayer::decide(Drb& drb, const Flow& flow, const Packet& pkt,
                                  FlowClass cls, Seconds now) {
  MarkRoute route;
  route.drop_fallback = config_.drop_fallback;
  route.short_circuit = config_.short_circuit && pkt.is_tcp() && flow.mode_known &&
                        flow.feedback.mode() != FeedbackMode::DownlinkFallback;

  switch (config_.aqm) {
    case AqmKind::None:
      return MarkDecision::Pass;
    case AqmKind::L4Span:
      return decide_mark(drb.marks, pkt, cls, route, drb.rng, now);
    case AqmKind::DualPi2Step: {
      if (pkt.payload_bytes() == 0) return MarkDecision::Pass;
      const Seconds head = drb.profile.oldest_pending_ingress().value_or(now);
      return dualpi2_step_mark(head, now, config_.step_threshold)
                 ? positive_decision(cls, route)
                 : MarkDecision::Pass;
    }
    case AqmKind::Bernoulli:
      if (pkt.payload_bytes() == 0) return MarkDecision::Pass;
      return drb.rng.bernoulli(config_.bernoulli_p) ? positive_decision(cls, route)
                                                    : MarkDecision::Pass;
  }
  return MarkDecision::Pass;
}

DownlinkResult MarkingLayer::on_dl_pkt(const Packet& pkt, DrbKey key, Seconds now) {
  Drb& drb = drb_at(key);
  Flow& flow = flows_[pkt.five_tuple];
  flow.drb = key;  // latest downlink packet defines the mapping

  const FlowClass cls = classify_flow(pkt.ecn);
  drb.marks.observe_downlink(pkt, cls, now);
  if (pkt.tcp && pkt.tcp->has(tcp_flag::kCwr)) {
    flow.feedback.on_downlink_cwr();
  }

  DownlinkResult out;
  out.decision = decide(drb, flow, pkt, cls, now);
  if (out.decision == MarkDecision::Drop) return out;

  const PdcpSn sn = drb.next_sn++;
  drb.profile.record_ingress(sn, pkt.size_bytes, now);
  out.pdcp_sn = sn;

  const bool short_circuited = config_.short_circuit && pkt.is_tcp() &&
                               flow.mode_known &&
                               flow.feedback.mode() != FeedbackMode::DownlinkFallback;
  if (short_circuited) {
    flow.feedback.record_tentative_mark(pkt, out.decision);
    out.forward = pkt;
  } else {
    out.forward = fallback_mark_downlink(pkt, out.decision);
  }
  return out;
}

std::optional<EgressEstimate> MarkingLayer::on_ran_feedback(
    DrbKey key, PdcpSn highest_tx_sn, std::optional<PdcpSn> highest_dlv_sn,
    Seconds now) {
  Drb& drb = drb_at(key);
  drb.profile.on_f1u_feedback(highest_tx_sn, highest_dlv_sn, now);
  auto est = drb.profile.egress_rate_smoothed();
  if (est) drb.marks.refresh(*est, now);
  drb.profile.gc_delivered(config_.gc_horizon, now);
  return est;
}

UplinkResult MarkingLayer::on_ul_packet(const Packet& pkt, Seconds /*now*/) {
  UplinkResult out{pkt, std::nullopt, false};
  auto it = flows_.find(reverse_tuple(pkt.five_tuple));
  if (it == flows_.end()) return out;
  Flow& flow = it->second;
  out.drb = flow.drb;
  if (!flow.mode_known) {
    flow.feedback.set_mode(classify_feedback_mode(pkt));
    flow.mode_known = true;
  }
  if (config_.short_circuit) {
    out.rewritten = flow.feedback.rewrite_ack(out.packet);
  }
  return out;
}

}  // namespace l4span
