#pragma once

#include <string>
#include <vector>

#include "l4span/types.hpp"

namespace l4span {

/// Capacity of one UE's link, in bytes per second, as a function of time.
///
/// Static, step and file traces are piecewise constant; the last segment
/// extends forever. Sinusoids are evaluated analytically.
class ChannelTrace {
 public:
  struct Segment {
    Seconds start = 0.0;
    BytesPerSec capacity = 0.0;
  };

  static ChannelTrace constant(BytesPerSec capacity);
  /// `low` for the first half of every period, `high` for the second.
  static ChannelTrace step(BytesPerSec low, BytesPerSec high, Seconds period,
                           Seconds horizon);
  static ChannelTrace sinusoid(BytesPerSec mean, BytesPerSec amplitude,
                               Seconds period, double phase_rad = 0.0);
  static ChannelTrace piecewise(std::vector<Segment> segments);
  /// Lines of `time_secs,capacity_bits_per_sec`; '#' starts a comment.
  /// Throws ConfigError on malformed or non-increasing records.
  static ChannelTrace from_file(const std::string& path);
  static ChannelTrace parse(const std::string& text, const std::string& origin);

  BytesPerSec capacity_at(Seconds t) const noexcept;
  /// Bytes deliverable in [t0, t1), integrating the trace.
  double integrate(Seconds t0, Seconds t1) const noexcept;

  bool is_sinusoid() const noexcept { return sinusoid_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }

 private:
  std::vector<Segment> segments_;
  bool sinusoid_ = false;
  BytesPerSec mean_ = 0.0;
  BytesPerSec amplitude_ = 0.0;
  Seconds period_ = 1.0;
  double phase_ = 0.0;
};

inline constexpr BytesPerSec mbps_to_bytes(double mbit_per_sec) noexcept {
  return mbit_per_sec * 1e6 / 8.0;
}
inline constexpr double bytes_to_mbps(BytesPerSec bytes_per_sec) noexcept {
  return bytes_per_sec * 8.0 / 1e6;
}

}  // namespace l4span
