#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "dagor/time.hpp"

namespace dagor {

enum class DetectionMode { kQueuingTime, kResponseTime };

std::string_view to_string(DetectionMode mode);
std::optional<DetectionMode> parse_detection_mode(std::string_view text);

// Compound monitoring window: closes after `interval` of time or after
// `max_samples` samples, whichever comes first.
struct WindowConfig {
  Duration interval = std::chrono::seconds{1};
  std::uint32_t max_samples = 2000;
  Duration queuing_threshold = std::chrono::milliseconds{20};
  DetectionMode mode = DetectionMode::kQueuingTime;
  Duration response_threshold = std::chrono::milliseconds{250};

  Duration active_threshold() const {
    return mode == DetectionMode::kQueuingTime ? queuing_threshold : response_threshold;
  }
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct WindowReport {
  Duration avg_wait{};
  std::uint32_t samples = 0;
  bool overloaded = false;
  Timestamp closed_at{};
};

// Averages per-request delay samples (queuing time or response time,
// depending on the mode) over compound windows.
class LoadMonitor {
 public:
  explicit LoadMonitor(WindowConfig config = {}, Timestamp start = kTimeZero);

  // Adds one sample, then closes the window if either criterion is met.
  // A negative sample is a caller bug and throws std::invalid_argument.
  std::optional<WindowReport> record_sample(Duration wait, Timestamp now);

  // Closes the window if its time budget has elapsed; adds no sample.
  std::optional<WindowReport> poll_window(Timestamp now);

  const WindowConfig& config() const { return config_; }
  Timestamp window_start() const { return window_start_; }
  std::uint32_t sample_count() const { return sample_count_; }
  Duration sample_sum() const { return sample_sum_; }

 private:
  WindowReport close(Timestamp now);

  WindowConfig config_;
  Timestamp window_start_;
  std::uint32_t sample_count_ = 0;
  Duration sample_sum_{};
};

}  // namespace dagor
