#include "l4span/types.hpp"

#include <string>

#include "l4span/errors.hpp"

namespace l4span {

std::uint8_t encode_ecn(EcnCodepoint ecn) noexcept {
  return static_cast<std::uint8_t>(ecn);
}

EcnCodepoint decode_ecn(std::uint8_t bits) {
  if (bits > 0b11) {
    throw DomainError("ECN field is 2 bits, got " + std::to_string(bits));
  }
  return static_cast<EcnCodepoint>(bits);
}

std::string_view to_string(EcnCodepoint ecn) noexcept {
  switch (ecn) {
    case EcnCodepoint::NotEct: return "not-ect";
    case EcnCodepoint::Ect1: return "ect1";
    case EcnCodepoint::Ect0: return "ect0";
    case EcnCodepoint::Ce: return "ce";
  }
  return "?";
}

FlowClass classify_flow(EcnCodepoint ecn) noexcept {
  switch (ecn) {
    case EcnCodepoint::Ect1:
    case EcnCodepoint::Ce:  // routed like DualPi2 routes CE: low-latency side
      return FlowClass::L4S;
    case EcnCodepoint::Ect0:
      return FlowClass::ClassicEcn;
    case EcnCodepoint::NotEct:
      break;
  }
  return FlowClass::NonEcn;
}

std::string_view to_string(FlowClass cls) noexcept {
  switch (cls) {
    case FlowClass::L4S: return "l4s";
    case FlowClass::ClassicEcn: return "classic";
    case FlowClass::NonEcn: return "non-ecn";
  }
  return "?";
}

FiveTuple reverse_tuple(const FiveTuple& ft) noexcept {
  return FiveTuple{ft.dst_addr, ft.src_addr, ft.dst_port, ft.src_port, ft.proto};
}

std::size_t FiveTupleHash::operator()(const FiveTuple& ft) const noexcept {
  std::uint64_t h = (std::uint64_t{ft.src_addr} << 32) | ft.dst_addr;
  std::uint64_t p = (std::uint64_t{ft.src_port} << 24) |
                    (std::uint64_t{ft.dst_port} << 8) |
                    static_cast<std::uint64_t>(ft.proto);
  h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<std::size_t>(h);
}

std::uint32_t header_floor(Proto proto) noexcept {
  return proto == Proto::Tcp ? kTcpHeaderFloor : kUdpHeaderFloor;
}

std::uint32_t Packet::payload_bytes() const noexcept {
  const auto floor = header_floor(five_tuple.proto);
  return size_bytes > floor ? size_bytes - floor : 0;
}

void validate_packet(const Packet& pkt) {
  if (pkt.size_bytes < header_floor(pkt.five_tuple.proto)) {
    throw DomainError("packet " + std::to_string(pkt.pkt_id) +
                      " smaller than its header floor");
  }
  if (pkt.tcp && pkt.tcp->accecn && !pkt.is_tcp()) {
    throw DomainError("AccECN fields on a non-TCP packet");
  }
  if (pkt.tcp && !pkt.is_tcp()) {
    throw DomainError("TCP header on a UDP packet");
  }
}

void DrbConfig::validate() const {
  if (max_queue_sdus == 0) {
    throw DomainError("max_queue_sdus must be positive");
  }
  if (mss_bytes <= kTcpHeaderFloor) {
    throw DomainError("mss_bytes must exceed the TCP header floor");
  }
}

}  // namespace l4span
