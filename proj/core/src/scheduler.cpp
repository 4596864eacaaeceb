#include "l4span/scheduler.hpp"

#include <algorithm>

#include "l4span/errors.hpp"

namespace l4span {

std::string_view to_string(SchedulerPolicy p) noexcept {
  return p == SchedulerPolicy::RoundRobin ? "round_robin" : "proportional_fair";
}

MacScheduler::MacScheduler(SchedulerPolicy policy, Seconds slot_len,
                           std::size_t n_ues, Seconds pf_horizon)
    : policy_(policy),
      slot_len_(slot_len),
      ewma_gain_(std::min(1.0, slot_len / pf_horizon)),
      avg_(n_ues, 0.0) {
  if (!(slot_len > 0.0)) throw DomainError("slot length must be positive");
  if (!(pf_horizon > 0.0)) throw DomainError("PF horizon must be positive");
}

std::vector<double> MacScheduler::allocate(const std::vector<UeDemand>& demand) {
  if (demand.size() != avg_.size()) {
    throw InvalidOperation("scheduler sized for a different UE count");
  }
  auto budget = policy_ == SchedulerPolicy::RoundRobin ? round_robin(demand)
                                                       : proportional_fair(demand);
  for (std::size_t i = 0; i < avg_.size(); ++i) {
    avg_[i] += ewma_gain_ * (budget[i] / slot_len_ - avg_[i]);
  }
  return budget;
}

std::vector<double> MacScheduler::round_robin(const std::vector<UeDemand>& demand) const {
  std::vector<double> budget(demand.size(), 0.0);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < demand.size(); ++i) {
    if (demand[i].backlog_bytes > 0.0 && demand[i].capacity > 0.0) active.push_back(i);
  }
  double free = 1.0;
  // water-filling: UEs needing less than an equal share are satisfied first
  while (!active.empty()) {
    const double share = free / static_cast<double>(active.size());
    std::vector<std::size_t> still;
    for (auto i : active) {
      const double need = demand[i].backlog_bytes / (demand[i].capacity * slot_len_);
      if (need <= share) {
        budget[i] = demand[i].backlog_bytes;
        free -= need;
      } else {
        still.push_back(i);
      }
    }
    if (still.size() == active.size()) {
      for (auto i : still) budget[i] = share * demand[i].capacity * slot_len_;
      break;
    }
    active.swap(still);
  }
  return budget;
}

std::vector<double> MacScheduler::proportional_fair(
    const std::vector<UeDemand>& demand) const {
  std::vector<double> budget(demand.size(), 0.0);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < demand.size(); ++i) {
    if (demand[i].backlog_bytes > 0.0 && demand[i].capacity > 0.0) order.push_back(i);
  }
  auto metric = [&](std::size_t i) {
    return demand[i].capacity / std::max(avg_[i], 1.0);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return metric(a) > metric(b); });
  double free = 1.0;
  for (auto i : order) {
    if (free <= 0.0) break;
    const double need = demand[i].backlog_bytes / (demand[i].capacity * slot_len_);
    const double got = std::min(need, free);
    budget[i] = got >= need ? demand[i].backlog_bytes
                            : got * demand[i].capacity * slot_len_;
    free -= got;
  }
  return budget;
}

}  // namespace l4span
