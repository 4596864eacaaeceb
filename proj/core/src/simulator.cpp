#include "l4span/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "l4span/errors.hpp"

namespace l4span {

struct Simulator::Event {
  Seconds at = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::SlotTick;
  std::uint32_t idx = 0;  // flow or DRB index, by kind
  std::uint64_t slot = 0;
  PdcpSn sn = 0;
  std::optional<PdcpSn> dlv;
  Packet pkt{};
  Seconds cu_ingress = 0.0;
  Seconds enqueued_at = 0.0;
  Seconds head_at = 0.0;
  Seconds first_tx = 0.0;
  Seconds tx_time = 0.0;
};

bool Simulator::EventLater::operator()(const Event& a, const Event& b) const noexcept {
  if (a.at != b.at) return a.at > b.at;
  return a.seq > b.seq;
}

struct Simulator::DrbRt {
  DrbKey key;
  std::size_t ue = 0;
  RlcQueue rlc;
  ByteCount forwarded = 0;
  // per-interval accumulators
  std::uint32_t slots = 0;
  std::uint32_t nonempty = 0;
  ByteCount tx = 0;
  double cap = 0.0;
  std::uint32_t fb_msgs = 0;
};

struct Simulator::UeRt {
  std::uint16_t ue_id = 0;
  ChannelTrace trace;
  std::vector<std::size_t> drbs;  // drb_id order
};

struct Simulator::FlowRt {
  FlowSpec spec;
  std::size_t drb = 0;
  FiveTuple tuple{};
  Seconds down_delay = 0.0;
  std::unique_ptr<TcpSender> tcp;
  TcpReceiver rx;
  std::unique_ptr<UdpSender> udp;
  UdpReceiver urx;
  std::deque<Seconds> pending_marks;
  std::optional<Seconds> timer_at;
  ByteCount last_delivered = 0;
  std::uint32_t marks = 0;
  std::uint32_t drops = 0;
  double rtt_sum = 0.0;
  std::uint32_t rtt_n = 0;

  ByteCount delivered() const noexcept {
    return tcp ? rx.delivered_bytes() : urx.delivered_bytes();
  }
};

namespace {

CcKind cc_for(SenderKind k) {
  switch (k) {
    case SenderKind::Cubic: return CcKind::Cubic;
    case SenderKind::Reno: return CcKind::Reno;
    default: return CcKind::Prague;
  }
}

bool is_udp(SenderKind k) {
  return k == SenderKind::UdpCbr || k == SenderKind::UdpPrague;
}

}  // namespace

Simulator::Simulator(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  air_rng_.seed(scenario_.seed ^ 0x9e3779b97f4a7c15ULL);

  LayerConfig lc = scenario_.aqm;
  lc.params.rng_seed = scenario_.seed;
  layer_ = std::make_unique<MarkingLayer>(lc);

  std::map<DrbKey, std::size_t> drb_index;
  for (const auto& ue : scenario_.ues) {
    UeRt rt;
    rt.ue_id = ue.ue_id;
    rt.trace = ue.channel.build(scenario_.horizon);
    auto cfgs = ue.drbs;
    std::sort(cfgs.begin(), cfgs.end(),
              [](const DrbConfig& a, const DrbConfig& b) { return a.drb_id < b.drb_id; });
    for (auto cfg : cfgs) {
      cfg.ue_id = ue.ue_id;
      layer_->add_drb(cfg);
      DrbKey key{ue.ue_id, cfg.drb_id};
      drb_index[key] = drbs_.size();
      rt.drbs.push_back(drbs_.size());
      drbs_.push_back(DrbRt{key, ues_.size(), RlcQueue(cfg)});
    }
    ues_.push_back(std::move(rt));
  }
  scheduler_ = std::make_unique<MacScheduler>(scenario_.scheduler, scenario_.slot,
                                              ues_.size());

  for (std::size_t i = 0; i < scenario_.flows.size(); ++i) {
    scenario_.flows[i].id = static_cast<std::uint32_t>(i);
  }
  for (const auto& spec : scenario_.flows) {
    FlowRt f;
    f.spec = spec;
    auto it = drb_index.find(DrbKey{spec.ue_id, spec.drb_id});
    if (it == drb_index.end()) {
      throw ConfigError("flows", "flow " + std::to_string(spec.id) + " names an unknown DRB");
    }
    f.drb = it->second;
    f.tuple.src_addr = 1000 + spec.id;
    f.tuple.dst_addr = spec.ue_id;
    f.tuple.src_port = static_cast<std::uint16_t>(5000 + spec.id);
    f.tuple.dst_port = 443;
    f.tuple.proto = is_udp(spec.sender) ? Proto::Udp : Proto::Tcp;
    f.down_delay = scenario_.path.server_to_cu + spec.extra_delay;
    const auto& drb_cfg = drbs_[f.drb].rlc.drb();
    if (is_udp(spec.sender)) {
      UdpSenderConfig uc;
      uc.flow = spec.id;
      uc.tuple = f.tuple;
      uc.packet_bytes = spec.packet_bytes;
      uc.mode = spec.sender == SenderKind::UdpPrague ? UdpMode::Prague : UdpMode::Cbr;
      uc.rate = mbps_to_bytes(spec.rate_mbps);
      uc.start = spec.start;
      uc.stop = spec.stop;
      f.udp = std::make_unique<UdpSender>(uc);
    } else {
      TcpSenderConfig tc;
      tc.flow = spec.id;
      tc.tuple = f.tuple;
      tc.mss_bytes = drb_cfg.mss_bytes;
      tc.cc = cc_for(spec.sender);
      tc.feedback = spec.feedback;
      tc.start = spec.start;
      tc.stop = spec.stop;
      tc.size_bytes = spec.size_bytes;
      tc.rwnd_bytes = scenario_.rwnd_bytes;
      tc.pacing = spec.pacing;
      f.tcp = std::make_unique<TcpSender>(tc);
    }
    FlowInfoRecord info;
    info.flow = spec.id;
    info.ue_id = spec.ue_id;
    info.drb_id = spec.drb_id;
    info.sender = spec.sender;
    info.start = spec.start;
    info.size_bytes = spec.size_bytes;
    rec_.flows.push_back(info);
    flows_.push_back(std::move(f));
  }
}

Simulator::~Simulator() = default;

const RlcQueue& Simulator::rlc(DrbKey key) const {
  for (const auto& d : drbs_) {
    if (d.key == key) return d.rlc;
  }
  throw NotFoundError("no DRB " + std::to_string(key.ue_id) + "/" +
                      std::to_string(key.drb_id));
}

ByteCount Simulator::layer_forwarded_bytes(DrbKey key) const {
  for (const auto& d : drbs_) {
    if (d.key == key) return d.forwarded;
  }
  throw NotFoundError("no DRB " + std::to_string(key.ue_id) + "/" +
                      std::to_string(key.drb_id));
}

void Simulator::push(Event ev) {
  ev.seq = seq_++;
  queue_.push(std::move(ev));
}

void Simulator::send_downlink(FlowRt& f, std::vector<Packet> pkts) {
  for (auto& p : pkts) {
    Event ev;
    ev.at = now_ + f.down_delay;
    ev.kind = EventKind::ArriveDownlink;
    ev.idx = f.spec.id;
    ev.pkt = std::move(p);
    push(std::move(ev));
  }
}

void Simulator::arm_timer(FlowRt& f) {
  auto t = f.tcp ? f.tcp->next_timer() : f.udp->next_timer();
  if (!t) return;
  const Seconds at = std::max(*t, now_);
  if (f.timer_at && *f.timer_at <= at) return;
  f.timer_at = at;
  Event ev;
  ev.at = at;
  ev.kind = EventKind::SenderTimer;
  ev.idx = f.spec.id;
  push(std::move(ev));
}

void Simulator::on_arrive_downlink(Event& ev) {
  FlowRt& f = flows_[ev.idx];
  DrbRt& d = drbs_[f.drb];
  auto res = layer_->on_dl_pkt(ev.pkt, d.key, now_);
  if (scenario_.metrics.decision_log) {
    rec_.marks.push_back(MarkLogEntry{now_, f.spec.id, ev.pkt.pkt_id, res.decision});
  }
  if (res.decision == MarkDecision::TentativeMark || res.decision == MarkDecision::MarkCe) {
    f.pending_marks.push_back(now_);
    ++f.marks;
  }
  if (!res.forward) {
    ++f.drops;
    return;
  }
  Packet pkt = std::move(*res.forward);
  const auto& est = layer_->mark_state(d.key).last_estimate();
  if (est && est->r_hat > 0.0) {
    pkt.trace.predicted_sojourn =
        predict_sojourn(layer_->profile(d.key).queued_bytes(), est->r_hat);
  }
  d.forwarded += pkt.size_bytes;
  Event next;
  next.at = now_ + scenario_.path.f1u_delay;
  next.kind = EventKind::RlcEnqueue;
  next.idx = static_cast<std::uint32_t>(f.drb);
  next.sn = *res.pdcp_sn;
  next.cu_ingress = now_;
  next.pkt = std::move(pkt);
  if (scenario_.path.f1u_delay <= 0.0) {
    on_rlc_enqueue(next);
  } else {
    push(std::move(next));
  }
}

void Simulator::on_rlc_enqueue(Event& ev) {
  DrbRt& d = drbs_[ev.idx];
  if (d.rlc.enqueue(ev.pkt, ev.sn, ev.cu_ingress, now_) == EnqueueResult::DroppedTail) {
    ++flows_[ev.pkt.trace.flow].drops;
  }
}

void Simulator::on_slot(Event& ev) {
  const Seconds t0 = static_cast<double>(ev.slot) * scenario_.slot;
  const Seconds t1 = static_cast<double>(ev.slot + 1) * scenario_.slot;
  std::vector<UeDemand> demand(ues_.size());
  std::vector<double> cap(ues_.size());
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    cap[i] = ues_[i].trace.integrate(t0, t1);
    demand[i].capacity = cap[i] / scenario_.slot;
    for (auto di : ues_[i].drbs) demand[i].backlog_bytes += drbs_[di].rlc.backlog_bytes();
  }
  const auto budgets = scheduler_->allocate(demand);
  const auto& path = scenario_.path;
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    double budget = budgets[i];
    for (auto di : ues_[i].drbs) {
      DrbRt& d = drbs_[di];
      ++d.slots;
      d.cap += cap[i];
      if (!d.rlc.empty()) ++d.nonempty;
      std::vector<TransmittedSdu> sent;
      if (budget > 0.0 && !d.rlc.empty()) {
        double unused = 0.0;
        sent = d.rlc.transmit(budget, t0, t1, &unused);
        budget = unused;
      }
      for (auto& ts : sent) {
        d.tx += ts.sdu.pkt.size_bytes;
        bool lost = false;
        if (path.air_loss > 0.0) {
          const double u = static_cast<double>(air_rng_() >> 11) * 0x1.0p-53;
          lost = u < path.air_loss;
        }
        auto at = d.rlc.schedule_delivery(ts.sdu.sn, ts.tx_time, path.delivery_delay,
                                          lost, path.arq_delay);
        if (!at) continue;
        Event dv;
        dv.at = *at;
        dv.kind = EventKind::DeliverToUe;
        dv.idx = ts.sdu.pkt.trace.flow;
        dv.cu_ingress = ts.sdu.cu_ingress;
        dv.enqueued_at = ts.sdu.enqueued_at;
        dv.head_at = ts.sdu.head_at;
        dv.first_tx = ts.sdu.first_tx.value_or(t0);
        dv.tx_time = ts.tx_time;
        dv.pkt = std::move(ts.sdu.pkt);
        push(std::move(dv));
      }
      std::optional<PdcpSn> dlv;
      if (d.rlc.drb().rlc_mode == RlcMode::AM) dlv = d.rlc.take_delivered(t1);
      if ((!sent.empty() || dlv) && d.rlc.highest_tx_sn()) {
        Event fb;
        fb.at = t1 + path.f1u_delay;
        fb.kind = EventKind::F1uFeedback;
        fb.idx = static_cast<std::uint32_t>(di);
        fb.sn = *d.rlc.highest_tx_sn();
        fb.dlv = dlv;
        push(std::move(fb));
      }
    }
  }
  if (t1 < scenario_.horizon - 1e-12) {
    Event nx;
    nx.at = t1;
    nx.kind = EventKind::SlotTick;
    nx.slot = ev.slot + 1;
    push(std::move(nx));
  }
}

void Simulator::on_deliver(Event& ev) {
  FlowRt& f = flows_[ev.idx];
  const Packet& pkt = ev.pkt;
  const auto& path = scenario_.path;
  if (pkt.trace.payload > 0 && scenario_.metrics.packet_records) {
    PacketRecord r;
    r.flow = f.spec.id;
    r.pkt_id = pkt.pkt_id;
    r.ue_id = f.spec.ue_id;
    r.drb_id = f.spec.drb_id;
    r.size_bytes = pkt.size_bytes;
    r.sent_at = pkt.trace.sent_at;
    r.cu_ingress = ev.cu_ingress;
    r.tx_time = ev.tx_time;
    r.delivered_at = now_;
    r.delay.propagation = (ev.cu_ingress - pkt.trace.sent_at) +
                          (ev.enqueued_at - ev.cu_ingress) + path.delivery_delay;
    r.delay.scheduling = ev.first_tx - ev.head_at;
    r.delay.queuing = (ev.tx_time - ev.enqueued_at) - r.delay.scheduling;
    r.delay.retransmission = now_ - ev.tx_time - path.delivery_delay;
    r.sojourn = ev.tx_time - ev.enqueued_at;
    if (pkt.trace.predicted_sojourn >= 0.0) r.predicted_sojourn = pkt.trace.predicted_sojourn;
    r.ce = pkt.ecn == EcnCodepoint::Ce;
    r.retransmission = pkt.trace.retransmission;
    rec_.packets.push_back(r);
  }
  std::optional<Packet> up;
  if (f.tcp) {
    up = f.rx.on_segment(pkt, ++ack_ids_, now_);
  } else {
    up = f.urx.on_datagram(pkt, f.spec.sender == SenderKind::UdpPrague, ++ack_ids_, now_);
  }
  if (!up) return;
  Event ul;
  ul.at = now_ + path.ue_uplink;
  ul.kind = EventKind::ArriveUplink;
  ul.idx = f.spec.id;
  ul.pkt = std::move(*up);
  push(std::move(ul));
}

void Simulator::on_interval(Event& ev) {
  const Seconds iv = scenario_.metrics.interval;
  for (auto& f : flows_) {
    FlowInterval r;
    r.t_end = now_;
    r.flow = f.spec.id;
    const ByteCount del = f.delivered();
    r.delivered_bytes = del - f.last_delivered;
    f.last_delivered = del;
    r.throughput_mbps = bytes_to_mbps(static_cast<double>(r.delivered_bytes) / iv);
    if (f.rtt_n > 0) r.rtt_mean = f.rtt_sum / f.rtt_n;
    r.rtt_samples = f.rtt_n;
    if (f.tcp) {
      r.cwnd_bytes = f.tcp->cc().cwnd();
    } else if (f.udp->cc()) {
      r.cwnd_bytes = f.udp->cc()->cwnd();
    }
    r.marks = f.marks;
    r.drops = f.drops;
    f.marks = f.drops = 0;
    f.rtt_sum = 0.0;
    f.rtt_n = 0;
    rec_.flow_intervals.push_back(r);
  }
  for (auto& d : drbs_) {
    DrbInterval r;
    r.t_end = now_;
    r.ue_id = d.key.ue_id;
    r.drb_id = d.key.drb_id;
    r.queue_bytes = d.rlc.standing_bytes();
    r.slots = d.slots;
    r.nonempty_slots = d.nonempty;
    r.tx_bytes = d.tx;
    r.capacity_bytes = d.cap;
    const auto& ms = layer_->mark_state(d.key);
    r.p_l4s = ms.p_l4s();
    r.p_classic = ms.p_classic();
    if (const auto& est = ms.last_estimate()) {
      r.r_hat = est->r_hat;
      r.e_hat = est->e_hat;
      r.sojourn_hat = est->unbounded() ? -1.0 : est->sojourn_hat;
    }
    r.feedback_msgs = d.fb_msgs;
    d.slots = d.nonempty = d.fb_msgs = 0;
    d.tx = 0;
    d.cap = 0.0;
    rec_.drb_intervals.push_back(r);
  }
  const auto k = ev.slot + 1;
  const Seconds next = static_cast<double>(k) * iv;
  if (next <= scenario_.horizon + 1e-9) {
    Event nx;
    nx.at = next;
    nx.kind = EventKind::IntervalTick;
    nx.slot = k;
    push(std::move(nx));
  }
}

Records Simulator::run() {
  for (auto& f : flows_) {
    Event ev;
    ev.at = f.spec.start;
    ev.kind = EventKind::FlowStart;
    ev.idx = f.spec.id;
    push(std::move(ev));
  }
  {
    Event ev;
    ev.at = 0.0;
    ev.kind = EventKind::SlotTick;
    push(std::move(ev));
  }
  {
    Event ev;
    ev.at = scenario_.metrics.interval;
    ev.kind = EventKind::IntervalTick;
    ev.slot = 1;
    push(std::move(ev));
  }

  const Seconds horizon = scenario_.horizon;
  while (!queue_.empty()) {
    if (queue_.top().at > horizon + 1e-9) break;
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    ++rec_.events;
    switch (ev.kind) {
      case EventKind::FlowStart: {
        FlowRt& f = flows_[ev.idx];
        send_downlink(f, f.tcp ? f.tcp->start(now_) : f.udp->on_timer(now_));
        arm_timer(f);
        break;
      }
      case EventKind::ArriveDownlink:
        on_arrive_downlink(ev);
        break;
      case EventKind::RlcEnqueue:
        on_rlc_enqueue(ev);
        break;
      case EventKind::SlotTick:
        on_slot(ev);
        break;
      case EventKind::F1uFeedback: {
        DrbRt& d = drbs_[ev.idx];
        layer_->on_ran_feedback(d.key, ev.sn, ev.dlv, now_);
        ++d.fb_msgs;
        break;
      }
      case EventKind::DeliverToUe:
        on_deliver(ev);
        break;
      case EventKind::ArriveUplink: {
        auto res = layer_->on_ul_packet(ev.pkt, now_);
        Event nx;
        nx.at = now_ + scenario_.path.cu_to_server;
        nx.kind = EventKind::AckToSender;
        nx.idx = ev.idx;
        nx.pkt = std::move(res.packet);
        push(std::move(nx));
        break;
      }
      case EventKind::AckToSender: {
        FlowRt& f = flows_[ev.idx];
        std::uint32_t signals = 0;
        if (f.tcp) {
          const bool was_established = f.tcp->established();
          auto out = f.tcp->on_ack(ev.pkt, now_);
          signals = f.tcp->last_ce_signals();
          if (was_established) {
            const Seconds rtt = now_ - ev.pkt.trace.echo_sent_at;
            rec_.rtts.push_back(RttSample{f.spec.id, now_, rtt});
            f.rtt_sum += rtt;
            ++f.rtt_n;
          }
          send_downlink(f, std::move(out));
        } else {
          f.udp->on_feedback(ev.pkt, now_);
          signals = f.udp->last_ce_signals();
          const Seconds rtt = now_ - ev.pkt.trace.echo_sent_at;
          rec_.rtts.push_back(RttSample{f.spec.id, now_, rtt});
          f.rtt_sum += rtt;
          ++f.rtt_n;
        }
        for (std::uint32_t i = 0; i < signals && !f.pending_marks.empty(); ++i) {
          rec_.feedback.push_back(FeedbackLatency{f.spec.id, f.pending_marks.front(), now_});
          f.pending_marks.pop_front();
        }
        arm_timer(f);
        break;
      }
      case EventKind::SenderTimer: {
        FlowRt& f = flows_[ev.idx];
        if (!f.timer_at || *f.timer_at != ev.at) break;  // superseded
        f.timer_at.reset();
        send_downlink(f, f.tcp ? f.tcp->on_timer(now_) : f.udp->on_timer(now_));
        arm_timer(f);
        break;
      }
      case EventKind::IntervalTick:
        on_interval(ev);
        break;
    }
    if (observer_) observer_(*this, ev.kind, now_);
  }

  for (std::size_t i = 0; i < flows_.size(); ++i) {
    const auto& f = flows_[i];
    if (f.tcp) {
      rec_.flows[i].completed_at = f.tcp->finished_at();
      rec_.flows[i].retransmissions = f.tcp->retransmissions();
    }
  }
  return std::move(rec_);
}

SimResult run_scenario(const Scenario& scenario) {
  Simulator sim(scenario);
  SimResult out;
  out.records = sim.run();
  out.summary = summarize(scenario, out.records);
  return out;
}

}  // namespace l4span
