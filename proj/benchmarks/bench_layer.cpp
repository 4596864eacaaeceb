// Per-call cost of the marking layer's two hot paths.

#include <benchmark/benchmark.h>

#include "l4span/layer.hpp"
#include "l4span/types.hpp"

using namespace l4span;

namespace {

Packet data_packet(std::uint32_t seq) {
  Packet p;
  p.five_tuple = {1, 2, 443, 50000, Proto::Tcp};
  p.size_bytes = 1500;
  p.ecn = EcnCodepoint::Ect1;
  p.tcp = TcpFields{seq, 0, tcp_flag::kAck, std::nullopt};
  return p;
}

MarkingLayer make_layer() {
  MarkingLayer layer{LayerConfig{}};
  layer.add_drb(DrbConfig{});
  return layer;
}

}  // namespace

static void BM_OnDlPkt(benchmark::State& state) {
  auto layer = make_layer();
  const DrbKey key{0, 1};
  Seconds now = 0.0;
  std::uint32_t seq = 0;
  PdcpSn last = 0;
  for (auto _ : state) {
    now += 1e-4;
    auto r = layer.on_dl_pkt(data_packet(seq), key, now);
    seq += 1460;
    if (r.pdcp_sn) last = *r.pdcp_sn;
    // keep the table bounded: everything older than a few packets drains
    if (last > 4 && (last % 64) == 0) layer.on_ran_feedback(key, last - 4, last - 4, now);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_OnDlPkt);

static void BM_OnRanFeedback(benchmark::State& state) {
  auto layer = make_layer();
  const DrbKey key{0, 1};
  Seconds now = 0.0;
  std::uint32_t seq = 0;
  PdcpSn sn = 0;
  // 16 packets in flight between ingress and transmission
  for (int i = 0; i < 16; ++i) {
    now += 1e-4;
    sn = *layer.on_dl_pkt(data_packet(seq), key, now).pdcp_sn;
    seq += 1460;
  }
  for (auto _ : state) {
    now += 1e-4;
    sn = *layer.on_dl_pkt(data_packet(seq), key, now).pdcp_sn;
    seq += 1460;
    auto est = layer.on_ran_feedback(key, sn - 16, sn - 16, now);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_OnRanFeedback);
BENCHMARK_MAIN();
