#include "dagor/load_monitor.hpp"

#include <stdexcept>

namespace dagor {

std::string_view to_string(DetectionMode mode) {
  return mode == DetectionMode::kQueuingTime ? "queuing_time" : "response_time";
}

std::optional<DetectionMode> parse_detection_mode(std::string_view text) {
  if (text == "queuing_time" || text == "queuing") return DetectionMode::kQueuingTime;
  if (text == "response_time" || text == "response") return DetectionMode::kResponseTime;
  return std::nullopt;
}

void WindowConfig::validate() const {
  if (interval <= Duration::zero()) throw std::invalid_argument("window.interval_ms must be > 0");
  if (max_samples == 0) throw std::invalid_argument("window.max_samples must be > 0");
  if (queuing_threshold <= Duration::zero())
    throw std::invalid_argument("window.queuing_threshold_ms must be > 0");
  if (response_threshold <= Duration::zero())
    throw std::invalid_argument("window.response_threshold_ms must be > 0");
}

LoadMonitor::LoadMonitor(WindowConfig config, Timestamp start)
    : config_(config), window_start_(start) {
  config_.validate();
}

std::optional<WindowReport> LoadMonitor::record_sample(Duration wait, Timestamp now) {
  if (wait < Duration::zero()) throw std::invalid_argument("negative delay sample");
  ++sample_count_;
  sample_sum_ += wait;
  if (now - window_start_ >= config_.interval || sample_count_ >= config_.max_samples) {
    return close(now);
  }
  return std::nullopt;
}

std::optional<WindowReport> LoadMonitor::poll_window(Timestamp now) {
  if (now - window_start_ >= config_.interval) return close(now);
  return std::nullopt;
}

WindowReport LoadMonitor::close(Timestamp now) {
  WindowReport report;
  report.samples = sample_count_;
  report.closed_at = now;
  if (sample_count_ > 0) {
    report.avg_wait = sample_sum_ / sample_count_;
    // Compare the exact sum rather than the truncated mean.
    report.overloaded = sample_sum_ > config_.active_threshold() * sample_count_;
  }
  sample_count_ = 0;
  sample_sum_ = Duration::zero();
  window_start_ = now;
  return report;
}

}  // namespace dagor
