#include "l4span/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

namespace l4span {

using nlohmann::json;

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  auto idx = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * n));
  idx = idx == 0 ? 0 : idx - 1;
  return v[std::min(idx, v.size() - 1)];
}

Percentiles percentiles(std::vector<double> v) {
  Percentiles p;
  p.n = v.size();
  if (v.empty()) return p;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  p.mean = sum / static_cast<double>(v.size());
  auto at = [&](double q) {
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    idx = idx == 0 ? 0 : idx - 1;
    return v[std::min(idx, v.size() - 1)];
  };
  p.p50 = at(0.5);
  p.p90 = at(0.9);
  p.p99 = at(0.99);
  p.p999 = at(0.999);
  return p;
}

Summary summarize(const Scenario& s, const Records& r) {
  Summary out;
  out.scenario = s.name;
  out.seed = s.seed;
  out.horizon = s.horizon;
  out.steady_state = s.metrics.steady_state;
  out.events = r.events;
  const Seconds ss = s.metrics.steady_state;
  const Seconds span = s.horizon - ss;

  std::map<std::uint32_t, FlowSummary> flows;
  for (const auto& f : r.flows) {
    auto& fs = flows[f.flow];
    fs.flow = f.flow;
    fs.sender = std::string(to_string(f.sender));
    fs.ue_id = f.ue_id;
    fs.retransmissions = f.retransmissions;
    if (f.completed_at) fs.completion_secs = *f.completed_at - f.start;
  }
  std::map<std::uint32_t, ByteCount> steady_bytes;
  for (const auto& iv : r.flow_intervals) {
    auto& fs = flows[iv.flow];
    fs.marks += iv.marks;
    fs.drops += iv.drops;
    if (iv.t_end > ss + 1e-9) steady_bytes[iv.flow] += iv.delivered_bytes;
  }
  std::map<std::uint32_t, std::vector<double>> owd, qd, rtt, fb;
  for (const auto& p : r.packets) {
    if (p.delivered_at < ss) continue;
    owd[p.flow].push_back((p.delivered_at - p.sent_at) * 1e3);
    qd[p.flow].push_back(p.delay.queuing * 1e3);
  }
  for (const auto& x : r.rtts) {
    if (x.at >= ss) rtt[x.flow].push_back(x.rtt * 1e3);
  }
  for (const auto& x : r.feedback) {
    if (x.observed_at >= ss) fb[x.flow].push_back((x.observed_at - x.decided_at) * 1e3);
  }
  for (auto& [id, fs] : flows) {
    fs.throughput_mbps = span > 0 ? steady_bytes[id] * 8.0 / span / 1e6 : 0.0;
    fs.one_way_ms = percentiles(owd[id]);
    fs.queuing_ms = percentiles(qd[id]);
    fs.rtt_ms = percentiles(rtt[id]);
    fs.feedback_latency_ms = percentiles(fb[id]);
    out.flows.push_back(fs);
  }

  struct Acc {
    ByteCount tx = 0;
    double cap = 0.0;
    std::uint64_t slots = 0, nonempty = 0;
    double queue_sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::pair<std::uint16_t, std::uint16_t>, Acc> drbs;
  for (const auto& iv : r.drb_intervals) {
    auto& a = drbs[{iv.ue_id, iv.drb_id}];
    if (iv.t_end <= ss + 1e-9) continue;
    a.tx += iv.tx_bytes;
    a.cap += iv.capacity_bytes;
    a.slots += iv.slots;
    a.nonempty += iv.nonempty_slots;
    a.queue_sum += static_cast<double>(iv.queue_bytes);
    ++a.n;
  }
  for (const auto& [key, a] : drbs) {
    DrbSummary d;
    d.ue_id = key.first;
    d.drb_id = key.second;
    d.utilization = a.cap > 0 ? static_cast<double>(a.tx) / a.cap : 0.0;
    d.nonempty_fraction = a.slots ? static_cast<double>(a.nonempty) / a.slots : 0.0;
    d.mean_queue_bytes = a.n ? a.queue_sum / static_cast<double>(a.n) : 0.0;
    d.throughput_mbps = span > 0 ? a.tx * 8.0 / span / 1e6 : 0.0;
    out.cell_utilization += d.utilization;
    out.drbs.push_back(d);
  }
  return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json pct_json(const Percentiles& p) {
  return {{"n", p.n}, {"mean", p.mean}, {"p50", p.p50},
          {"p90", p.p90}, {"p99", p.p99}, {"p999", p.p999}};
}

}  // namespace

void write_flow_intervals(std::ostream& os, const Records& r) {
  for (const auto& iv : r.flow_intervals) {
    json j{{"t", iv.t_end},
           {"flow", iv.flow},
           {"delivered_bytes", iv.delivered_bytes},
           {"throughput_mbps", iv.throughput_mbps},
           {"rtt_ms", iv.rtt_mean ? json(*iv.rtt_mean * 1e3) : json(nullptr)},
           {"rtt_samples", iv.rtt_samples},
           {"cwnd_bytes", iv.cwnd_bytes},
           {"marks", iv.marks},
           {"drops", iv.drops}};
    os << j.dump() << '\n';
  }
}

void write_drb_intervals(std::ostream& os, const Records& r) {
  for (const auto& iv : r.drb_intervals) {
    json j{{"t", iv.t_end},
           {"ue", iv.ue_id},
           {"drb", iv.drb_id},
           {"queue_bytes", iv.queue_bytes},
           {"slots", iv.slots},
           {"nonempty_slots", iv.nonempty_slots},
           {"tx_bytes", iv.tx_bytes},
           {"capacity_bytes", iv.capacity_bytes},
           {"p_l4s", iv.p_l4s},
           {"p_classic", iv.p_classic},
           {"r_hat", iv.r_hat},
           {"e_hat", iv.e_hat},
           {"sojourn_hat", iv.sojourn_hat},
           {"feedback_msgs", iv.feedback_msgs}};
    os << j.dump() << '\n';
  }
}

void write_packets(std::ostream& os, const Records& r) {
  for (const auto& p : r.packets) {
    json j{{"flow", p.flow},
           {"pkt", p.pkt_id},
           {"ue", p.ue_id},
           {"drb", p.drb_id},
           {"size", p.size_bytes},
           {"sent", p.sent_at},
           {"cu_ingress", p.cu_ingress},
           {"tx", p.tx_time},
           {"delivered", p.delivered_at},
           {"propagation", p.delay.propagation},
           {"queuing", p.delay.queuing},
           {"scheduling", p.delay.scheduling},
           {"retransmission", p.delay.retransmission},
           {"sojourn", p.sojourn},
           {"predicted_sojourn", opt(p.predicted_sojourn)},
           {"ce", p.ce},
           {"retx", p.retransmission}};
    os << j.dump() << '\n';
  }
}

void write_summary_json(std::ostream& os, const Summary& s) {
  json j;
  j["scenario"] = s.scenario;
  j["seed"] = s.seed;
  j["horizon_secs"] = s.horizon;
  j["steady_state_secs"] = s.steady_state;
  j["events"] = s.events;
  j["cell_utilization"] = s.cell_utilization;
  j["flows"] = json::array();
  for (const auto& f : s.flows) {
    j["flows"].push_back({{"flow", f.flow},
                          {"sender", f.sender},
                          {"ue", f.ue_id},
                          {"throughput_mbps", f.throughput_mbps},
                          {"one_way_ms", pct_json(f.one_way_ms)},
                          {"queuing_ms", pct_json(f.queuing_ms)},
                          {"rtt_ms", pct_json(f.rtt_ms)},
                          {"feedback_latency_ms", pct_json(f.feedback_latency_ms)},
                          {"completion_secs", opt(f.completion_secs)},
                          {"marks", f.marks},
                          {"drops", f.drops},
                          {"retransmissions", f.retransmissions}});
  }
  j["drbs"] = json::array();
  for (const auto& d : s.drbs) {
    j["drbs"].push_back({{"ue", d.ue_id},
                         {"drb", d.drb_id},
                         {"utilization", d.utilization},
                         {"nonempty_fraction", d.nonempty_fraction},
                         {"mean_queue_bytes", d.mean_queue_bytes},
                         {"throughput_mbps", d.throughput_mbps}});
  }
  os << j.dump(2) << '\n';
}

void write_summary_text(std::ostream& os, const Summary& s) {
  os << "scenario " << s.scenario << "  seed " << s.seed << "  horizon "
     << s.horizon << " s  (steady state from " << s.steady_state << " s)\n";
  os << std::fixed << std::setprecision(2);
  os << "flow  sender      ue   tput Mb/s  owd p50  owd p99  queue p50  rtt p50  "
        "rtt p99.9  marks  drops  done s\n";
  for (const auto& f : s.flows) {
    os << std::setw(4) << f.flow << "  " << std::left << std::setw(10) << f.sender
       << std::right << std::setw(4) << f.ue_id << std::setw(11) << f.throughput_mbps
       << std::setw(9) << f.one_way_ms.p50 << std::setw(9) << f.one_way_ms.p99
       << std::setw(11) << f.queuing_ms.p50 << std::setw(9) << f.rtt_ms.p50
       << std::setw(11) << f.rtt_ms.p999 << std::setw(7) << f.marks << std::setw(7)
       << f.drops << "  ";
    if (f.completion_secs) {
      os << std::setprecision(3) << *f.completion_secs << std::setprecision(2);
    } else {
      os << "-";
    }
    os << '\n';
  }
  os << "drb         util  nonempty  mean queue B  tput Mb/s\n";
  for (const auto& d : s.drbs) {
    os << std::setw(3) << d.ue_id << "/" << std::left << std::setw(4) << d.drb_id
       << std::right << std::setw(8) << d.utilization << std::setw(10)
       << d.nonempty_fraction << std::setw(14) << d.mean_queue_bytes << std::setw(11)
       << d.throughput_mbps << '\n';
  }
  os << "cell utilization " << s.cell_utilization << "  events " << s.events << '\n';
  os.unsetf(std::ios::floatfield);
}

void write_flow_intervals_csv(std::ostream& os, const Records& r) {
  os << "t,flow,delivered_bytes,throughput_mbps,rtt_ms,cwnd_bytes,marks,drops\n";
  os << std::setprecision(9);
  for (const auto& iv : r.flow_intervals) {
    os << iv.t_end << ',' << iv.flow << ',' << iv.delivered_bytes << ','
       << iv.throughput_mbps << ',';
    if (iv.rtt_mean) os << *iv.rtt_mean * 1e3;
    os << ',' << iv.cwnd_bytes << ',' << iv.marks << ',' << iv.drops << '\n';
  }
}

void write_packets_csv(std::ostream& os, const Records& r) {
  os << "flow,pkt,ue,drb,size,sent,delivered,propagation,queuing,scheduling,"
        "retransmission,sojourn,predicted_sojourn,ce\n";
  os << std::setprecision(9);
  for (const auto& p : r.packets) {
    os << p.flow << ',' << p.pkt_id << ',' << p.ue_id << ',' << p.drb_id << ','
       << p.size_bytes << ',' << p.sent_at << ',' << p.delivered_at << ','
       << p.delay.propagation << ',' << p.delay.queuing << ',' << p.delay.scheduling
       << ',' << p.delay.retransmission << ',' << p.sojourn << ',';
    if (p.predicted_sojourn) os << *p.predicted_sojourn;
    os << ',' << (p.ce ? 1 : 0) << '\n';
  }
}

}  // namespace l4span
