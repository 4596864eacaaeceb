#include "l4span/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "l4span/errors.hpp"

namespace l4span {

ChannelTrace ChannelTrace::constant(BytesPerSec capacity) {
  return piecewise({{0.0, capacity}});
}

ChannelTrace ChannelTrace::step(BytesPerSec low, BytesPerSec high, Seconds period,
                                Seconds horizon) {
  if (!(period > 0.0)) throw DomainError("step period must be positive");
  std::vector<Segment> segs;
  for (Seconds t = 0.0; t <= horizon; t += period) {
    segs.push_back({t, low});
    segs.push_back({t + period / 2, high});
  }
  return piecewise(std::move(segs));
}

ChannelTrace ChannelTrace::sinusoid(BytesPerSec mean, BytesPerSec amplitude,
                                    Seconds period, double phase_rad) {
  if (!(period > 0.0)) throw DomainError("sinusoid period must be positive");
  if (amplitude < 0.0 || mean - amplitude < 0.0) {
    throw DomainError("sinusoid would go negative");
  }
  ChannelTrace tr;
  tr.sinusoid_ = true;
  tr.mean_ = mean;
  tr.amplitude_ = amplitude;
  tr.period_ = period;
  tr.phase_ = phase_rad;
  return tr;
}

ChannelTrace ChannelTrace::piecewise(std::vector<Segment> segments) {
  if (segments.empty()) throw DomainError("trace needs at least one segment");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].capacity < 0.0) throw DomainError("negative capacity");
    if (i > 0 && !(segments[i].start > segments[i - 1].start)) {
      throw DomainError("trace breakpoints must be strictly increasing");
    }
  }
  ChannelTrace tr;
  tr.segments_ = std::move(segments);
  return tr;
}

ChannelTrace ChannelTrace::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open channel trace");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

ChannelTrace ChannelTrace::parse(const std::string& text, const std::string& origin) {
  std::vector<Segment> segs;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(where, "expected time,bits_per_sec");
    double t = 0.0;
    double bps = 0.0;
    try {
      std::size_t used = 0;
      t = std::stod(line.substr(0, comma), &used);
      bps = std::stod(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      throw ConfigError(where, "unparseable number");
    }
    if (bps < 0.0) throw ConfigError(where, "negative capacity");
    if (!segs.empty() && !(t > segs.back().start)) {
      throw ConfigError(where, "times must be strictly increasing");
    }
    segs.push_back({t, bps / 8.0});
  }
  if (segs.empty()) throw ConfigError(origin, "trace has no records");
  return piecewise(std::move(segs));
}

BytesPerSec ChannelTrace::capacity_at(Seconds t) const noexcept {
  if (sinusoid_) {
    return mean_ + amplitude_ * std::sin(2.0 * std::numbers::pi * t / period_ + phase_);
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](Seconds v, const Segment& s) { return v < s.start; });
  if (it == segments_.begin()) return segments_.front().capacity;
  return std::prev(it)->capacity;
}

double ChannelTrace::integrate(Seconds t0, Seconds t1) const noexcept {
  if (!(t1 > t0)) return 0.0;
  if (sinusoid_) {
    const double w = 2.0 * std::numbers::pi / period_;
    return mean_ * (t1 - t0) -
           amplitude_ / w * (std::cos(w * t1 + phase_) - std::cos(w * t0 + phase_));
  }
  double total = 0.0;
  Seconds t = t0;
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](Seconds v, const Segment& s) { return v < s.start; });
  BytesPerSec cap = it == segments_.begin() ? segments_.front().capacity
                                            : std::prev(it)->capacity;
  while (t < t1) {
    const Seconds next = it == segments_.end() ? t1 : std::min(t1, it->start);
    total += cap * (next - t);
    t = next;
    if (it != segments_.end()) {
      cap = it->capacity;
      ++it;
    }
  }
  return total;
}

}  // namespace l4span
