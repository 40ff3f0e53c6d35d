#pragma once

#include <chrono>
#include <cstdint>

namespace dagor {

// Virtual clock for the simulator. Time starts at zero and advances only
// when events are dispatched; resolution is one microsecond.
struct SimClock {
  using rep = std::int64_t;
  using period = std::micro;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using Timestamp = SimClock::time_point;

inline constexpr Timestamp kTimeZero{};

constexpr Duration from_ms(double ms) {
  return Duration{static_cast<SimClock::rep>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))};
}

constexpr double to_ms(Duration d) {
  return static_cast<double>(d.count()) / 1000.0;
}

constexpr double to_seconds(Duration d) {
  return static_cast<double>(d.count()) / 1e6;
}

constexpr double to_ms(Timestamp t) { return to_ms(t.time_since_epoch()); }

}  // namespace dagor
