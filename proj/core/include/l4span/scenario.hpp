#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l4span/channel.hpp"
#include "l4span/layer.hpp"
#include "l4span/scheduler.hpp"
#include "l4span/senders.hpp"
#include "l4span/types.hpp"

namespace l4span {

/// One-way delays outside the RLC. Defaults give a 38 ms base RTT:
/// 13 + 8 + 4 + 13 ms plus the slot wait.
struct PathConfig {
  Seconds server_to_cu = 0.013;
  Seconds cu_to_server = 0.013;
  Seconds ue_uplink = 0.004;   // UE -> CU, uncongested
  Seconds f1u_delay = 0.0;     // CU <-> DU, both directions
  Seconds delivery_delay = 0.008;
  Seconds arq_delay = 0.020;
  double air_loss = 0.0;       // per-SDU first-attempt loss probability
};

struct ChannelSpec {
  enum class Kind { Static, Step, Sinusoid, File } kind = Kind::Static;
  double mbps = 40.0;            // static
  double low_mbps = 20.0;        // step
  double high_mbps = 40.0;
  double mean_mbps = 30.0;       // sinusoid
  double amplitude_mbps = 10.0;
  Seconds period = 5.0;          // step, sinusoid
  double phase = 0.0;            // radians
  std::string file;              // file

  ChannelTrace build(Seconds horizon) const;
};

enum class SenderKind : std::uint8_t { Prague, Cubic, Reno, UdpCbr, UdpPrague };
std::string_view to_string(SenderKind k) noexcept;

struct FlowSpec {
  std::uint32_t id = 0;          // assigned in file order
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 1;
  SenderKind sender = SenderKind::Prague;
  Seconds start = 0.0;
  Seconds stop = 0.0;            // 0 = horizon
  ByteCount size_bytes = 0;      // 0 = long-lived
  EcnFeedback feedback = EcnFeedback::AccEcn;
  double rate_mbps = 10.0;       // UDP
  std::uint32_t packet_bytes = 1200;  // UDP
  Seconds extra_delay = 0.0;     // added to server -> CU for this flow
  bool pacing = true;
};

struct UeSpec {
  std::uint16_t ue_id = 0;
  ChannelSpec channel{};
  std::vector<DrbConfig> drbs;
};

struct MetricsSpec {
  Seconds interval = 0.1;
  Seconds steady_state = 2.0;    // samples before this are warm-up
  bool packet_records = true;
  bool decision_log = false;
};

struct Scenario {
  std::string name = "unnamed";
  Seconds horizon = 30.0;
  std::uint64_t seed = 1;
  SchedulerPolicy scheduler = SchedulerPolicy::RoundRobin;
  Seconds slot = 0.0005;
  PathConfig path{};
  LayerConfig aqm{};
  ByteCount rwnd_bytes = 6u << 20;
  std::vector<UeSpec> ues;
  std::vector<FlowSpec> flows;
  MetricsSpec metrics{};

  /// Cross-checks references and ranges. Throws ConfigError naming the
  /// offending field.
  void validate() const;
  const UeSpec* find_ue(std::uint16_t ue_id) const noexcept;
};

/// A dotted-path override such as `aqm.tau=0.005` or `ues.0.channel.mbps=20`.
/// The value is parsed as JSON, or taken as a string if that fails.
using Override = std::pair<std::string, std::string>;

Scenario parse_scenario(const std::string& json_text, const std::string& origin,
                        const std::vector<Override>& overrides = {});
Scenario load_scenario(const std::string& path,
                       const std::vector<Override>& overrides = {});
/// Canonical JSON rendering with every default filled in.
std::string scenario_to_json(const Scenario& s);

}  // namespace l4span
