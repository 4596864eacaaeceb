#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "l4span/types.hpp"

namespace l4span {

enum class SchedulerPolicy : std::uint8_t { RoundRobin, ProportionalFair };
std::string_view to_string(SchedulerPolicy p) noexcept;

struct UeDemand {
  double backlog_bytes = 0.0;
  BytesPerSec capacity = 0.0;  // rate if the UE had the whole slot
};

/// Fluid MAC scheduler. Each slot's resources are a unit fraction split
/// among backlogged UEs; a UE given fraction f may send f * capacity * slot
/// bytes. Fractions a UE cannot use are handed to the others.
class MacScheduler {
 public:
  MacScheduler(SchedulerPolicy policy, Seconds slot_len, std::size_t n_ues,
               Seconds pf_horizon = 0.1);

  /// Per-UE byte budgets for one slot. Never exceeds a UE's backlog.
  std::vector<double> allocate(const std::vector<UeDemand>& demand);

  SchedulerPolicy policy() const noexcept { return policy_; }
  Seconds slot_len() const noexcept { return slot_len_; }
  double average_rate(std::size_t ue) const { return avg_.at(ue); }

 private:
  std::vector<double> round_robin(const std::vector<UeDemand>& demand) const;
  std::vector<double> proportional_fair(const std::vector<UeDemand>& demand) const;

  SchedulerPolicy policy_;
  Seconds slot_len_;
  double ewma_gain_;
  std::vector<double> avg_;  // served bytes/s, PF only
};

}  // namespace l4span
