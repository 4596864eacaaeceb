#include <gtest/gtest.h>

#include "l4span/errors.hpp"
#include "l4span/types.hpp"

using namespace l4span;

TEST(Ecn, EncodeDecodeRoundTrip) {
  for (auto c : {EcnCodepoint::NotEct, EcnCodepoint::Ect1, EcnCodepoint::Ect0,
                 EcnCodepoint::Ce}) {
    EXPECT_EQ(decode_ecn(encode_ecn(c)), c);
  }
  EXPECT_EQ(encode_ecn(EcnCodepoint::Ect1), 0b01);
  EXPECT_EQ(encode_ecn(EcnCodepoint::Ect0), 0b10);
  EXPECT_THROW(decode_ecn(4), DomainError);
}

TEST(Ecn, ClassifyIsTotal) {
  EXPECT_EQ(classify_flow(EcnCodepoint::Ect1), FlowClass::L4S);
  EXPECT_EQ(classify_flow(EcnCodepoint::Ect0), FlowClass::ClassicEcn);
  EXPECT_EQ(classify_flow(EcnCodepoint::NotEct), FlowClass::NonEcn);
  EXPECT_EQ(classify_flow(EcnCodepoint::Ce), FlowClass::L4S);
  for (std::uint8_t b = 0; b < 4; ++b) {
    const auto c = classify_flow(decode_ecn(b));
    EXPECT_EQ(c, classify_flow(decode_ecn(b)));
  }
}

TEST(FiveTuple, ReverseSwapsAndIsInvolution) {
  const FiveTuple tcp{7, 9, 1000, 443, Proto::Tcp};
  const FiveTuple r = reverse_tuple(tcp);
  EXPECT_EQ(r, (FiveTuple{9, 7, 443, 1000, Proto::Tcp}));
  EXPECT_EQ(reverse_tuple(r), tcp);
  const FiveTuple dns{1, 2, 53, 53, Proto::Udp};
  EXPECT_EQ(reverse_tuple(dns), (FiveTuple{2, 1, 53, 53, Proto::Udp}));
}

TEST(Packet, ValidationRejectsUndersizedAndUdpAccEcn) {
  Packet p;
  p.five_tuple.proto = Proto::Tcp;
  p.size_bytes = 39;
  EXPECT_THROW(validate_packet(p), DomainError);
  p.size_bytes = 1500;
  EXPECT_NO_THROW(validate_packet(p));
  EXPECT_EQ(p.payload_bytes(), 1460u);

  Packet u;
  u.five_tuple.proto = Proto::Udp;
  u.size_bytes = 100;
  u.tcp = TcpFields{};
  u.tcp->accecn = AccEcnFields{};
  EXPECT_THROW(validate_packet(u), DomainError);
}

TEST(DrbConfig, Validation) {
  DrbConfig d;
  EXPECT_NO_THROW(d.validate());
  d.max_queue_sdus = 0;
  EXPECT_THROW(d.validate(), DomainError);
  d.max_queue_sdus = 256;
  d.mss_bytes = 20;
  EXPECT_THROW(d.validate(), DomainError);
}
