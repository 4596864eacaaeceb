#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <random>
#include <vector>

#include "l4span/channel.hpp"
#include "l4span/layer.hpp"
#include "l4span/metrics.hpp"
#include "l4span/rlc.hpp"
#include "l4span/scenario.hpp"
#include "l4span/scheduler.hpp"
#include "l4span/senders.hpp"

namespace l4span {

enum class EventKind : std::uint8_t {
  FlowStart,
  ArriveDownlink,  // packet reaches the CU
  RlcEnqueue,      // packet reaches the DU over F1-U
  SlotTick,
  F1uFeedback,
  DeliverToUe,
  ArriveUplink,    // ACK / feedback reaches the CU
  AckToSender,
  SenderTimer,
  IntervalTick,
};

/// Single-threaded discrete-event run of one scenario. Events execute in
/// (time, insertion order); the same scenario always yields the same
/// records.
class Simulator {
 public:
  explicit Simulator(Scenario scenario);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  Records run();

  /// Called after every event; used by tests to check invariants.
  using Observer = std::function<void(const Simulator&, EventKind, Seconds)>;
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  const MarkingLayer& layer() const noexcept { return *layer_; }
  const RlcQueue& rlc(DrbKey key) const;
  const Scenario& scenario() const noexcept { return scenario_; }
  Seconds now() const noexcept { return now_; }
  /// Bytes handed to each DRB by the layer (before any RLC drop).
  ByteCount layer_forwarded_bytes(DrbKey key) const;

 private:
  struct Event;
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const noexcept;
  };
  struct DrbRt;
  struct UeRt;
  struct FlowRt;

  void push(Event ev);
  void send_downlink(FlowRt& f, std::vector<Packet> pkts);
  void arm_timer(FlowRt& f);
  void on_arrive_downlink(Event& ev);
  void on_rlc_enqueue(Event& ev);
  void on_slot(Event& ev);
  void on_deliver(Event& ev);
  void on_interval(Event& ev);

  Scenario scenario_;
  std::unique_ptr<MarkingLayer> layer_;
  std::unique_ptr<MacScheduler> scheduler_;
  std::vector<UeRt> ues_;
  std::vector<DrbRt> drbs_;
  std::vector<FlowRt> flows_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t ack_ids_ = 0;
  Seconds now_ = 0.0;
  std::mt19937_64 air_rng_;
  Records rec_;
  Observer observer_;
};

struct SimResult {
  Records records;
  Summary summary;
};

SimResult run_scenario(const Scenario& scenario);

}  // namespace l4span
