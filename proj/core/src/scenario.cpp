#include "l4span/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "l4span/errors.hpp"

namespace l4span {

using nlohmann::json;

ChannelTrace ChannelSpec::build(Seconds horizon) const {
  switch (kind) {
    case Kind::Static: return ChannelTrace::constant(mbps_to_bytes(mbps));
    case Kind::Step:
      return ChannelTrace::step(mbps_to_bytes(low_mbps), mbps_to_bytes(high_mbps),
                                period, horizon);
    case Kind::Sinusoid:
      return ChannelTrace::sinusoid(mbps_to_bytes(mean_mbps),
                                    mbps_to_bytes(amplitude_mbps), period, phase);
    case Kind::File: return ChannelTrace::from_file(file);
  }
  throw ConfigError("channel.type", "unknown channel kind");
}

std::string_view to_string(SenderKind k) noexcept {
  switch (k) {
    case SenderKind::Prague: return "prague";
    case SenderKind::Cubic: return "cubic";
    case SenderKind::Reno: return "reno";
    case SenderKind::UdpCbr: return "udp_cbr";
    case SenderKind::UdpPrague: return "udp_prague";
  }
  return "?";
}

namespace {

/// Reads fields of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = raw(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception& e) {
        throw ConfigError(field(key), std::string("wrong type: ") + e.what());
      }
    }
  }

  double number(const std::string& key, double fallback, double lo, double hi) {
    double v = fallback;
    get(key, v);
    if (!(v >= lo && v <= hi)) {
      std::ostringstream msg;
      msg << "value " << v << " outside [" << lo << ", " << hi << "]";
      throw ConfigError(field(key), msg.str());
    }
    return v;
  }

  template <typename E>
  E choice(const std::string& key, E fallback,
           std::initializer_list<std::pair<const char*, E>> options) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    const auto s = v->get<std::string>();
    std::string known;
    for (const auto& [name, value] : options) {
      if (s == name) return value;
      known += known.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(field(key), "unknown value '" + s + "' (expected " + known + ")");
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

PathConfig read_path(Reader r) {
  PathConfig p;
  p.server_to_cu = r.number("server_to_cu_secs", p.server_to_cu, 0, 10);
  p.cu_to_server = r.number("cu_to_server_secs", p.cu_to_server, 0, 10);
  p.ue_uplink = r.number("ue_uplink_secs", p.ue_uplink, 0, 10);
  p.f1u_delay = r.number("f1u_delay_secs", p.f1u_delay, 0, 10);
  p.delivery_delay = r.number("delivery_delay_secs", p.delivery_delay, 0, 10);
  p.arq_delay = r.number("arq_delay_secs", p.arq_delay, 0, 10);
  p.air_loss = r.number("air_loss", p.air_loss, 0, 1);
  r.finish();
  return p;
}

LayerConfig read_aqm(Reader r) {
  LayerConfig c;
  c.aqm = r.choice("kind", AqmKind::L4Span,
                   {{"l4span", AqmKind::L4Span},
                    {"dualpi2_step", AqmKind::DualPi2Step},
                    {"none", AqmKind::None},
                    {"bernoulli", AqmKind::Bernoulli}});
  c.params.tau_thr = r.number("tau_secs", c.params.tau_thr, 1e-6, 10);
  c.params.beta = r.number("beta", c.params.beta, 0, 1);
  if (!(c.params.beta > 0.0 && c.params.beta < 1.0)) {
    throw ConfigError(r.field("beta"), "must lie strictly between 0 and 1");
  }
  c.coherence_time = r.number("coherence_secs", c.coherence_time, 1e-4, 10);
  r.get("short_circuit", c.short_circuit);
  r.get("drop_fallback", c.drop_fallback);
  c.marking.shared_policy = r.choice("shared_policy", SharedPolicy::Coupled,
                                     {{"coupled", SharedPolicy::Coupled},
                                      {"all_l4s", SharedPolicy::AllL4s},
                                      {"all_classic", SharedPolicy::AllClassic},
                                      {"separate", SharedPolicy::Separate}});
  r.get("force_zero_error", c.marking.force_zero_error);
  c.marking.flow_idle_timeout =
      r.number("flow_idle_timeout_secs", c.marking.flow_idle_timeout, 0, kInf);
  c.step_threshold = r.number("threshold_secs", c.step_threshold, 1e-6, 10);
  c.bernoulli_p = r.number("probability", c.bernoulli_p, 0, 1);
  c.gc_horizon = r.number("gc_horizon_secs", c.gc_horizon, 0, 100);
  r.finish();
  return c;
}

ChannelSpec read_channel(Reader r) {
  ChannelSpec c;
  c.kind = r.choice("type", ChannelSpec::Kind::Static,
                    {{"static", ChannelSpec::Kind::Static},
                     {"step", ChannelSpec::Kind::Step},
                     {"sinusoid", ChannelSpec::Kind::Sinusoid},
                     {"file", ChannelSpec::Kind::File}});
  c.mbps = r.number("mbps", c.mbps, 0, 1e5);
  c.low_mbps = r.number("low_mbps", c.low_mbps, 0, 1e5);
  c.high_mbps = r.number("high_mbps", c.high_mbps, 0, 1e5);
  c.mean_mbps = r.number("mean_mbps", c.mean_mbps, 0, 1e5);
  c.amplitude_mbps = r.number("amplitude_mbps", c.amplitude_mbps, 0, 1e5);
  c.period = r.number("period_secs", c.period, 1e-3, 1e6);
  c.phase = r.number("phase_rad", c.phase, -1e3, 1e3);
  r.get("file", c.file);
  if (c.kind == ChannelSpec::Kind::Sinusoid && c.amplitude_mbps > c.mean_mbps) {
    throw ConfigError(r.field("amplitude_mbps"), "exceeds mean_mbps");
  }
  if (c.kind == ChannelSpec::Kind::File && c.file.empty()) {
    throw ConfigError(r.field("file"), "required for file channels");
  }
  r.finish();
  return c;
}

DrbConfig read_drb(Reader r, std::uint16_t ue_id) {
  DrbConfig d;
  d.ue_id = ue_id;
  d.drb_id = static_cast<std::uint16_t>(r.number("drb_id", d.drb_id, 1, 32));
  d.rlc_mode = r.choice("rlc_mode", RlcMode::AM, {{"am", RlcMode::AM}, {"um", RlcMode::UM}});
  d.max_queue_sdus =
      static_cast<std::uint32_t>(r.number("max_queue_sdus", d.max_queue_sdus, 1, 1e7));
  d.mss_bytes = static_cast<std::uint32_t>(
      r.number("mss_bytes", d.mss_bytes, kTcpHeaderFloor + 1, 9000));
  r.finish();
  return d;
}

json* walk(json& root, const std::string& path) {
  json* cur = &root;
  std::istringstream parts(path);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ConfigError(path, "empty path segment");
    if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError(path, "'" + part + "' is not an array index");
      }
      if (idx >= cur->size()) throw ConfigError(path, "index out of range");
      cur = &(*cur)[idx];
    } else if (cur->is_object() || cur->is_null()) {
      cur = &(*cur)[part];
    } else {
      throw ConfigError(path, "cannot descend into a scalar");
    }
  }
  return cur;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::string& origin,
                        const std::vector<Override>& overrides) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin, std::string("invalid JSON: ") + e.what());
  }
  for (const auto& [path, value] : overrides) {
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;
    }
    *walk(root, path) = parsed;
  }

  Scenario s;
  Reader r(root, "");
  r.get("name", s.name);
  s.horizon = r.number("horizon_secs", s.horizon, 1e-3, 1e5);
  double seed = static_cast<double>(s.seed);
  seed = r.number("seed", seed, 0, 9.007199254740992e15);
  s.seed = static_cast<std::uint64_t>(seed);
  s.scheduler = r.choice("scheduler", SchedulerPolicy::RoundRobin,
                         {{"round_robin", SchedulerPolicy::RoundRobin},
                          {"proportional_fair", SchedulerPolicy::ProportionalFair}});
  s.slot = r.number("slot_secs", s.slot, 1e-5, 0.1);
  s.rwnd_bytes = static_cast<ByteCount>(
      r.number("rwnd_bytes", static_cast<double>(s.rwnd_bytes), 3000, 1e10));
  if (const json* p = r.raw("path")) s.path = read_path(Reader(*p, "path"));
  if (const json* a = r.raw("aqm")) s.aqm = read_aqm(Reader(*a, "aqm"));
  s.aqm.params.rng_seed = s.seed;

  if (const json* ues = r.raw("ues")) {
    if (!ues->is_array()) throw ConfigError("ues", "expected an array");
    for (std::size_t i = 0; i < ues->size(); ++i) {
      Reader u((*ues)[i], "ues." + std::to_string(i));
      const auto base = static_cast<std::uint16_t>(u.number("ue_id", 1, 0, 65000));
      const auto count = static_cast<std::uint16_t>(u.number("count", 1, 1, 1024));
      ChannelSpec ch;
      if (const json* c = u.raw("channel")) ch = read_channel(Reader(*c, u.field("channel")));
      std::vector<const json*> drb_json;
      if (const json* d = u.raw("drbs")) {
        if (!d->is_array()) throw ConfigError(u.field("drbs"), "expected an array");
        for (const auto& x : *d) drb_json.push_back(&x);
      }
      u.finish();
      for (std::uint16_t k = 0; k < count; ++k) {
        UeSpec ue;
        ue.ue_id = static_cast<std::uint16_t>(base + k);
        ue.channel = ch;
        for (std::size_t di = 0; di < drb_json.size(); ++di) {
          ue.drbs.push_back(read_drb(
              Reader(*drb_json[di], u.field("drbs." + std::to_string(di))), ue.ue_id));
        }
        if (ue.drbs.empty()) ue.drbs.push_back(DrbConfig{ue.ue_id});
        s.ues.push_back(std::move(ue));
      }
    }
  }

  if (const json* flows = r.raw("flows")) {
    if (!flows->is_array()) throw ConfigError("flows", "expected an array");
    for (std::size_t i = 0; i < flows->size(); ++i) {
      const std::string where = "flows." + std::to_string(i);
      Reader f((*flows)[i], where);
      FlowSpec spec;
      spec.sender = f.choice("sender", SenderKind::Prague,
                             {{"prague", SenderKind::Prague},
                              {"cubic", SenderKind::Cubic},
                              {"reno", SenderKind::Reno},
                              {"udp_cbr", SenderKind::UdpCbr},
                              {"udp_prague", SenderKind::UdpPrague}});
      const bool tcp = spec.sender == SenderKind::Prague ||
                       spec.sender == SenderKind::Cubic || spec.sender == SenderKind::Reno;
      spec.feedback = spec.sender == SenderKind::Prague ? EcnFeedback::AccEcn
                      : tcp                             ? EcnFeedback::Classic
                                                        : EcnFeedback::None;
      spec.feedback = f.choice("feedback", spec.feedback,
                               {{"accecn", EcnFeedback::AccEcn},
                                {"classic", EcnFeedback::Classic},
                                {"none", EcnFeedback::None}});
      spec.drb_id = static_cast<std::uint16_t>(f.number("drb", 1, 1, 32));
      spec.start = f.number("start_secs", 0.0, 0, 1e5);
      spec.stop = f.number("stop_secs", 0.0, 0, 1e5);
      spec.size_bytes = static_cast<ByteCount>(f.number("size_bytes", 0, 0, 4e9));
      spec.rate_mbps = f.number("rate_mbps", spec.rate_mbps, 1e-3, 1e5);
      spec.packet_bytes = static_cast<std::uint32_t>(
          f.number("packet_bytes", spec.packet_bytes, kUdpHeaderFloor + 1, 9000));
      spec.extra_delay = f.number("extra_delay_secs", 0.0, 0, 10);
      f.get("pacing", spec.pacing);

      std::vector<std::uint16_t> targets;
      const json* ue = f.raw("ue");
      if (!ue) throw ConfigError(f.field("ue"), "required");
      if (ue->is_string() && ue->get<std::string>() == "all") {
        for (const auto& u : s.ues) targets.push_back(u.ue_id);
      } else if (ue->is_number_unsigned()) {
        targets.push_back(ue->get<std::uint16_t>());
      } else {
        throw ConfigError(f.field("ue"), "expected a UE id or \"all\"");
      }
      f.finish();
      for (auto t : targets) {
        if (!s.find_ue(t)) {
          throw ConfigError(f.field("ue"), "flow references undefined UE " +
                                               std::to_string(t));
        }
        FlowSpec copy = spec;
        copy.ue_id = t;
        copy.id = static_cast<std::uint32_t>(s.flows.size());
        s.flows.push_back(copy);
      }
    }
  }

  if (const json* m = r.raw("metrics")) {
    Reader mr(*m, "metrics");
    s.metrics.interval = mr.number("interval_secs", s.metrics.interval, 1e-3, 1e3);
    s.metrics.steady_state = mr.number("steady_state_secs", s.metrics.steady_state, 0, 1e5);
    mr.get("packet_records", s.metrics.packet_records);
    mr.get("decision_log", s.metrics.decision_log);
    mr.finish();
  }
  r.finish();
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path, overrides);
}

const UeSpec* Scenario::find_ue(std::uint16_t ue_id) const noexcept {
  for (const auto& u : ues) {
    if (u.ue_id == ue_id) return &u;
  }
  return nullptr;
}

void Scenario::validate() const {
  if (ues.empty()) throw ConfigError("ues", "at least one UE is required");
  std::set<std::uint16_t> ids;
  for (std::size_t i = 0; i < ues.size(); ++i) {
    if (!ids.insert(ues[i].ue_id).second) {
      throw ConfigError("ues." + std::to_string(i) + ".ue_id",
                        "duplicate UE id " + std::to_string(ues[i].ue_id));
    }
    std::set<std::uint16_t> drbs;
    for (const auto& d : ues[i].drbs) {
      if (!drbs.insert(d.drb_id).second) {
        throw ConfigError("ues." + std::to_string(i) + ".drbs",
                          "duplicate DRB id " + std::to_string(d.drb_id));
      }
    }
  }
  if (!(metrics.steady_state < horizon)) {
    throw ConfigError("metrics.steady_state_secs", "must be before the horizon");
  }
  for (const auto& f : flows) {
    const std::string where = "flows." + std::to_string(f.id);
    const UeSpec* ue = find_ue(f.ue_id);
    if (!ue) throw ConfigError(where + ".ue", "undefined UE " + std::to_string(f.ue_id));
    bool drb_ok = false;
    for (const auto& d : ue->drbs) drb_ok = drb_ok || d.drb_id == f.drb_id;
    if (!drb_ok) {
      throw ConfigError(where + ".drb", "UE " + std::to_string(f.ue_id) +
                                            " has no DRB " + std::to_string(f.drb_id));
    }
    const Seconds stop = f.stop > 0.0 ? f.stop : horizon;
    if (!(f.start < stop) || stop > horizon) {
      throw ConfigError(where + ".start_secs", "need start < stop <= horizon");
    }
    const bool tcp = f.sender == SenderKind::Prague || f.sender == SenderKind::Cubic ||
                     f.sender == SenderKind::Reno;
    if (!tcp && f.feedback != EcnFeedback::None) {
      throw ConfigError(where + ".feedback", "UDP flows carry no TCP feedback");
    }
  }
  try {
    aqm.validate();
  } catch (const DomainError& e) {
    throw ConfigError("aqm", e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  auto drb_json = [](const DrbConfig& d) {
    return json{{"drb_id", d.drb_id},
                {"rlc_mode", d.rlc_mode == RlcMode::AM ? "am" : "um"},
                {"max_queue_sdus", d.max_queue_sdus},
                {"mss_bytes", d.mss_bytes}};
  };
  auto channel_json = [](const ChannelSpec& c) {
    static const char* names[] = {"static", "step", "sinusoid", "file"};
    json j{{"type", names[static_cast<int>(c.kind)]}};
    switch (c.kind) {
      case ChannelSpec::Kind::Static: j["mbps"] = c.mbps; break;
      case ChannelSpec::Kind::Step:
        j["low_mbps"] = c.low_mbps;
        j["high_mbps"] = c.high_mbps;
        j["period_secs"] = c.period;
        break;
      case ChannelSpec::Kind::Sinusoid:
        j["mean_mbps"] = c.mean_mbps;
        j["amplitude_mbps"] = c.amplitude_mbps;
        j["period_secs"] = c.period;
        j["phase_rad"] = c.phase;
        break;
      case ChannelSpec::Kind::File: j["file"] = c.file; break;
    }
    return j;
  };
  static const char* policies[] = {"coupled", "all_l4s", "all_classic", "separate"};

  json j;
  j["name"] = s.name;
  j["horizon_secs"] = s.horizon;
  j["seed"] = s.seed;
  j["scheduler"] = std::string(to_string(s.scheduler));
  j["slot_secs"] = s.slot;
  j["rwnd_bytes"] = s.rwnd_bytes;
  j["path"] = {{"server_to_cu_secs", s.path.server_to_cu},
               {"cu_to_server_secs", s.path.cu_to_server},
               {"ue_uplink_secs", s.path.ue_uplink},
               {"f1u_delay_secs", s.path.f1u_delay},
               {"delivery_delay_secs", s.path.delivery_delay},
               {"arq_delay_secs", s.path.arq_delay},
               {"air_loss", s.path.air_loss}};
  j["aqm"] = {{"kind", std::string(to_string(s.aqm.aqm))},
              {"tau_secs", s.aqm.params.tau_thr},
              {"beta", s.aqm.params.beta},
              {"coherence_secs", s.aqm.coherence_time},
              {"short_circuit", s.aqm.short_circuit},
              {"drop_fallback", s.aqm.drop_fallback},
              {"shared_policy", policies[static_cast<int>(s.aqm.marking.shared_policy)]},
              {"force_zero_error", s.aqm.marking.force_zero_error},
              {"flow_idle_timeout_secs", s.aqm.marking.flow_idle_timeout},
              {"threshold_secs", s.aqm.step_threshold},
              {"probability", s.aqm.bernoulli_p},
              {"gc_horizon_secs", s.aqm.gc_horizon}};
  j["ues"] = json::array();
  for (const auto& u : s.ues) {
    json ue{{"ue_id", u.ue_id}, {"channel", channel_json(u.channel)}, {"drbs", json::array()}};
    for (const auto& d : u.drbs) ue["drbs"].push_back(drb_json(d));
    j["ues"].push_back(ue);
  }
  j["flows"] = json::array();
  for (const auto& f : s.flows) {
    json fj{{"ue", f.ue_id},
            {"drb", f.drb_id},
            {"sender", std::string(to_string(f.sender))},
            {"start_secs", f.start},
            {"stop_secs", f.stop},
            {"size_bytes", f.size_bytes},
            {"feedback", std::string(to_string(f.feedback))},
            {"extra_delay_secs", f.extra_delay},
            {"pacing", f.pacing}};
    if (f.sender == SenderKind::UdpCbr || f.sender == SenderKind::UdpPrague) {
      fj["rate_mbps"] = f.rate_mbps;
      fj["packet_bytes"] = f.packet_bytes;
    }
    j["flows"].push_back(fj);
  }
  j["metrics"] = {{"interval_secs", s.metrics.interval},
                  {"steady_state_secs", s.metrics.steady_state},
                  {"packet_records", s.metrics.packet_records},
                  {"decision_log", s.metrics.decision_log}};
  return j.dump(2);
}

}  // namespace l4span
