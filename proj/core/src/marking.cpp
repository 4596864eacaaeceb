#include "l4span/marking.hpp"

#include <algorithm>
#include <cmath>

#include "l4span/errors.hpp"

namespace l4span {

void MarkParams::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError("beta must lie in (0, 1)");
  }
  if (!(tau_thr > 0.0)) {
    throw DomainError("tau_thr must be positive");
  }
  if (mss_bytes == 0) {
    throw DomainError("mss_bytes must be positive");
  }
}

double k_constant(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError("beta must lie in (0, 1)");
  }
  return (1.0 + beta) / 2.0 * std::sqrt(2.0 / (1.0 - beta * beta));
}

double standard_normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double p_l4s(double n_queue, BytesPerSec r_hat, BytesPerSec e_hat,
             Seconds tau_thr) noexcept {
  const double drain_needed = n_queue / tau_thr;
  if (e_hat <= 0.0) {
    return drain_needed >= r_hat ? 1.0 : 0.0;
  }
  return standard_normal_cdf((drain_needed - r_hat) / e_hat);
}

std::optional<double> p_classic(double mss, double k, Seconds rtt_hat,
                                BytesPerSec r_hat) noexcept {
  if (!(rtt_hat > 0.0) || !(r_hat > 0.0) || std::isinf(rtt_hat)) {
    return std::nullopt;
  }
  const double x = mss * k / (rtt_hat * r_hat);
  return std::min(1.0, x * x);
}

CoupledProbabilities coupled_probabilities(double p_classic, double k) noexcept {
  const double pc = std::clamp(p_classic, 0.0, 1.0);
  return {std::min(1.0, coupling_coefficient(k) * std::sqrt(pc)), pc};
}

ErrorCost error_cost_bounds(BytesPerSec r_e_true, BytesPerSec r_hat,
                            Seconds rt_p, Seconds tau_s) {
  if (!(r_e_true > 0.0) || !(rt_p > 0.0)) {
    throw DomainError("error_cost_bounds needs positive rate and RTT");
  }
  ErrorCost cost;
  if (r_hat > r_e_true) {
    cost.rtt_inflation_secs = rt_p * (r_hat - r_e_true) / r_e_true;
  } else if (r_hat < r_e_true) {
    cost.throughput_loss = (rt_p + tau_s) * (r_e_true - r_hat) / rt_p;
  }
  return cost;
}

std::string_view to_string(DrbMode mode) noexcept {
  switch (mode) {
    case DrbMode::L4sOnly: return "l4s-only";
    case DrbMode::ClassicOnly: return "classic-only";
    case DrbMode::Shared: return "shared";
  }
  return "?";
}

std::string_view to_string(MarkDecision d) noexcept {
  switch (d) {
    case MarkDecision::Pass: return "pass";
    case MarkDecision::MarkCe: return "mark-ce";
    case MarkDecision::TentativeMark: return "tentative-mark";
    case MarkDecision::Drop: return "drop";
  }
  return "?";
}

MarkDecision positive_decision(FlowClass cls, MarkRoute route) noexcept {
  if (cls == FlowClass::NonEcn) {
    return route.drop_fallback ? MarkDecision::Drop : MarkDecision::Pass;
  }
  return route.short_circuit ? MarkDecision::TentativeMark : MarkDecision::MarkCe;
}

DrbMarkState::DrbMarkState(MarkParams params, MarkingOptions options)
    : params_(params), options_(options), k_(k_constant(params.beta)) {
  params_.validate();
}

void DrbMarkState::observe_downlink(const Packet& pkt, FlowClass cls,
                                    Seconds now) {
  auto& info = flows_[pkt.five_tuple];
  info.last_seen = now;
  if (pkt.tcp && pkt.tcp->has(tcp_flag::kSyn)) {
    if (!info.rtt_star) info.syn_at = now;
    return;
  }
  if (info.syn_at && !info.rtt_star) {
    info.rtt_star = now - *info.syn_at;
  }
  if (pkt.payload_bytes() == 0) return;

  info.bytes += pkt.size_bytes;
  const bool was_l4s = info.bytes != pkt.size_bytes && info.cls == FlowClass::L4S;
  const bool first = info.bytes == pkt.size_bytes;
  if (first || info.cls != cls) {
    if (!first) {
      if (was_l4s) --l4s_flows_; else --other_flows_;
    }
    info.cls = cls;
    if (cls == FlowClass::L4S) ++l4s_flows_; else ++other_flows_;
    update_mode();
  }
}

void DrbMarkState::update_mode() noexcept {
  if (l4s_flows_ > 0 && other_flows_ > 0) {
    mode_ = DrbMode::Shared;
  } else if (l4s_flows_ > 0) {
    mode_ = DrbMode::L4sOnly;
  } else if (other_flows_ > 0) {
    mode_ = DrbMode::ClassicOnly;
  }
}

void DrbMarkState::forget_idle(Seconds now) {
  for (auto it = flows_.begin(); it != flows_.end();) {
    if (it->second.last_seen < now - options_.flow_idle_timeout) {
      if (it->second.bytes > 0) {
        if (it->second.cls == FlowClass::L4S) --l4s_flows_; else --other_flows_;
      }
      it = flows_.erase(it);
    } else {
      ++it;
    }
  }
  update_mode();
}

std::optional<Seconds> DrbMarkState::rtt_star(const FiveTuple& flow) const {
  auto it = flows_.find(flow);
  if (it == flows_.end()) return std::nullopt;
  return it->second.rtt_star;
}

std::optional<Seconds> DrbMarkState::rtt_estimate(const FiveTuple& flow,
                                                  Seconds sojourn_hat) const {
  if (auto star = rtt_star(flow)) return *star + sojourn_hat;
  if (sojourn_hat > 0.0) return 2.0 * sojourn_hat;
  return std::nullopt;
}

std::optional<Seconds> DrbMarkState::drb_rtt_estimate(Seconds sojourn_hat) const {
  const bool any_classic = other_flows_ > 0;
  double weighted = 0.0;
  double weight = 0.0;
  for (const auto& [ft, info] : flows_) {
    if (!info.rtt_star || info.bytes == 0) continue;
    if (any_classic && info.cls == FlowClass::L4S) continue;
    weighted += *info.rtt_star * static_cast<double>(info.bytes);
    weight += static_cast<double>(info.bytes);
  }
  if (weight > 0.0) return weighted / weight + sojourn_hat;
  if (sojourn_hat > 0.0) return 2.0 * sojourn_hat;
  return std::nullopt;
}

void DrbMarkState::refresh(const EgressEstimate& est, Seconds now) {
  if (now - last_sweep_ >= 1.0) {
    forget_idle(now);
    last_sweep_ = now;
  }
  last_estimate_ = est;
  n_l_ = est.r_hat * params_.tau_thr;
  const double e_hat = options_.force_zero_error ? 0.0 : est.e_hat;
  p_l4s_ = l4span::p_l4s(static_cast<double>(est.n_queue), est.r_hat, e_hat,
                         params_.tau_thr);

  p_classic_ = 0.0;
  if (!est.unbounded()) {
    if (auto rtt = drb_rtt_estimate(est.sojourn_hat)) {
      p_classic_ = l4span::p_classic(params_.mss_bytes, k_, *rtt, est.r_hat)
                       .value_or(0.0);
    }
  }
  p_l4s_coupled_ = coupled_probabilities(p_classic_, k_).p_l4s;
}

double DrbMarkState::probability_for(FlowClass cls) const noexcept {
  const bool l4s = cls == FlowClass::L4S;
  switch (mode_) {
    case DrbMode::L4sOnly:
      return l4s ? p_l4s_ : p_classic_;
    case DrbMode::ClassicOnly:
      return l4s ? p_l4s_ : p_classic_;
    case DrbMode::Shared:
      switch (options_.shared_policy) {
        case SharedPolicy::Coupled: return l4s ? p_l4s_coupled_ : p_classic_;
        case SharedPolicy::AllL4s: return p_l4s_;
        case SharedPolicy::AllClassic: return p_classic_;
        case SharedPolicy::Separate: return l4s ? p_l4s_ : p_classic_;
      }
  }
  return 0.0;
}

bool DrbMarkState::estimate_fresh(Seconds now) const noexcept {
  return last_estimate_ &&
         now - last_estimate_->at <= 2.0 * options_.estimation_window;
}

MarkDecision decide_mark(const DrbMarkState& state, const Packet& pkt,
                         FlowClass flow_class, MarkRoute route, MarkRng& rng,
                         Seconds now) {
  if (pkt.payload_bytes() == 0) return MarkDecision::Pass;
  if (!state.estimate_fresh(now)) return MarkDecision::Pass;
  if (!rng.bernoulli(state.probability_for(flow_class))) {
    return MarkDecision::Pass;
  }
  return positive_decision(flow_class, route);
}

}  // namespace l4span
