#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

namespace l4span {

using PdcpSn = std::uint32_t;
using Seconds = double;
using ByteCount = std::uint64_t;
using BytesPerSec = double;

/// The 2-bit IP ECN field. Enumerator values are the on-wire bit patterns.
enum class EcnCodepoint : std::uint8_t {
  NotEct = 0b00,
  Ect1 = 0b01,
  Ect0 = 0b10,
  Ce = 0b11,
};

std::uint8_t encode_ecn(EcnCodepoint ecn) noexcept;
/// Throws DomainError for values above 3.
EcnCodepoint decode_ecn(std::uint8_t bits);
std::string_view to_string(EcnCodepoint ecn) noexcept;

enum class FlowClass : std::uint8_t { L4S, ClassicEcn, NonEcn };

/// Ect1 and Ce map to L4S, Ect0 to classic ECN, NotEct to non-ECN.
FlowClass classify_flow(EcnCodepoint ecn) noexcept;
std::string_view to_string(FlowClass cls) noexcept;

enum class Proto : std::uint8_t { Tcp, Udp };

/// Host addresses are abstract ids; the simulator never routes on them.
struct FiveTuple {
  std::uint32_t src_addr = 0;
  std::uint32_t dst_addr = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::Tcp;

  friend auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

FiveTuple reverse_tuple(const FiveTuple& ft) noexcept;

struct FiveTupleHash {
  std::size_t operator()(const FiveTuple& ft) const noexcept;
};

enum class Direction : std::uint8_t { Downlink, Uplink };

namespace tcp_flag {
inline constexpr std::uint8_t kSyn = 0x01;
inline constexpr std::uint8_t kAck = 0x02;
inline constexpr std::uint8_t kEce = 0x04;
inline constexpr std::uint8_t kCwr = 0x08;
}  // namespace tcp_flag

/// AccECN feedback at field-semantics level: a 3-bit wrapping CE packet
/// counter plus cumulative byte counters per codepoint.
struct AccEcnFields {
  std::uint8_t ace_counter = 0;
  ByteCount ce_bytes = 0;
  ByteCount ect0_bytes = 0;
  ByteCount ect1_bytes = 0;

  friend bool operator==(const AccEcnFields&, const AccEcnFields&) = default;
};

struct TcpFields {
  std::uint32_t seq = 0;
  std::uint32_t ack_no = 0;
  std::uint8_t flags = 0;
  std::optional<AccEcnFields> accecn;

  bool has(std::uint8_t flag) const noexcept { return (flags & flag) != 0; }
  void set(std::uint8_t flag, bool on) noexcept {
    flags = on ? static_cast<std::uint8_t>(flags | flag)
               : static_cast<std::uint8_t>(flags & ~flag);
  }

  friend bool operator==(const TcpFields&, const TcpFields&) = default;
};

inline constexpr std::uint32_t kTcpHeaderFloor = 40;
inline constexpr std::uint32_t kUdpHeaderFloor = 28;

std::uint32_t header_floor(Proto proto) noexcept;

/// Simulation-only bookkeeping carried alongside a packet. Never read by the
/// marking layer's decisions.
struct PacketTrace {
  std::uint32_t flow = 0;
  Seconds sent_at = 0.0;      // left the sender
  Seconds echo_sent_at = 0.0; // on ACKs: sent_at of the segment being acked
  std::uint32_t echo_seq = 0;
  std::uint32_t payload = 0;
  std::uint64_t udp_ce_pkts = 0;  // UDP in-payload feedback
  std::uint64_t udp_pkts = 0;
  bool retransmission = false;
  double predicted_sojourn = -1.0;  // CU prediction at ingress; < 0 if none
};

struct Packet {
  std::uint64_t pkt_id = 0;
  FiveTuple five_tuple{};
  std::uint32_t size_bytes = 0;
  EcnCodepoint ecn = EcnCodepoint::NotEct;
  Direction direction = Direction::Downlink;
  std::optional<TcpFields> tcp;
  Seconds created_at = 0.0;
  /// Set when a middlebox rewrote header fields; stands in for checksum
  /// recomputation.
  bool header_rewritten = false;
  PacketTrace trace{};

  std::uint32_t payload_bytes() const noexcept;
  bool is_tcp() const noexcept { return five_tuple.proto == Proto::Tcp; }
};

/// Checks size floor and the AccECN-only-on-TCP rule. Throws DomainError.
void validate_packet(const Packet& pkt);

enum class RlcMode : std::uint8_t { AM, UM };

struct DrbConfig {
  std::uint16_t ue_id = 0;
  std::uint16_t drb_id = 1;
  RlcMode rlc_mode = RlcMode::AM;
  std::uint32_t max_queue_sdus = 16384;
  std::uint32_t mss_bytes = 1500;

  /// Throws DomainError on zero queue length or MSS below the TCP header.
  void validate() const;
};

}  // namespace l4span
