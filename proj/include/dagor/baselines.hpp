#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dagor/time.hpp"

namespace dagor {

using Rng = std::mt19937_64;

// ---- random shedding -------------------------------------------------------

struct RandomShedParams {
  Duration window = std::chrono::seconds{1};
};

enum class ShedDecision { kAdmit, kReject };

ShedDecision random_shed_decision(bool overloaded, double shed_probability, Rng& rng);

// Estimates the shed probability for the next window from the last one:
// p = 1 - (capacity - backlog / window) / arrival_rate, clamped to [0, 1].
// Capacity is measured as completions per unit of busy worker time, so it is
// known even when the server is not saturated.
class RandomShedEstimator {
 public:
  RandomShedEstimator(RandomShedParams params, int workers);

  void on_arrival() { ++arrivals_; }
  void on_completion(Duration busy) {
    ++completions_;
    busy_ += busy;
  }
  // Closes the window; `backlog` is the number of admitted requests still
  // waiting for a worker.
  double close_window(std::size_t backlog);

  double shed_probability() const { return p_; }
  const RandomShedParams& params() const { return params_; }

 private:
  RandomShedParams params_;
  int workers_;
  std::uint64_t arrivals_ = 0;
  std::uint64_t completions_ = 0;
  Duration busy_{};
  double p_ = 0.0;
};

// ---- CoDel -----------------------------------------------------------------

struct CoDelParams {
  Duration target = std::chrono::milliseconds{5};
  Duration interval = std::chrono::milliseconds{100};
};

enum class DequeueDecision { kDeliver, kDrop };

// Controlled-delay drop-at-head state machine. Dropping starts once sojourn
// times stay above `target` for a full `interval`; while dropping, the gap
// between drops is interval / sqrt(count).
class CoDelState {
 public:
  explicit CoDelState(CoDelParams params = {});

  // `now` must be non-decreasing. `queue_empty` is true when the dequeued
  // request was the last one waiting; the last request is never dropped.
  DequeueDecision on_dequeue(Duration sojourn, Timestamp now, bool queue_empty);

  bool dropping() const { return dropping_; }
  std::uint32_t drop_count() const { return count_; }
  // Zero when sojourn is currently below target.
  Timestamp first_above_time() const { return first_above_time_; }
  Timestamp drop_next() const { return drop_next_; }
  const CoDelParams& params() const { return params_; }

  Timestamp control_law(Timestamp t, std::uint32_t count) const;

 private:
  bool ok_to_drop(Duration sojourn, Timestamp now, bool queue_empty);

  CoDelParams params_;
  Timestamp first_above_time_{};  // deadline: first_above + interval
  Timestamp drop_next_{};
  std::uint32_t count_ = 0;
  std::uint32_t last_count_ = 0;
  bool dropping_ = false;
};

DequeueDecision codel_on_dequeue(CoDelState& state, Duration sojourn, Timestamp now,
                                 bool queue_empty = false);

// ---- SEDA-style adaptive rate ----------------------------------------------

struct SedaParams {
  Duration target_90p = std::chrono::milliseconds{20};
  double additive_step = 2.0;     // requests/s added per calm window
  double decrease_factor = 0.9;   // multiplier per hot window
  double min_rate = 1.0;
  double ceiling = 2000.0;
  Duration window = std::chrono::seconds{1};
  std::uint32_t window_samples = 100;
  Duration burst = std::chrono::milliseconds{10};
};

struct SedaState {
  SedaParams params;
  double admit_rate;
  explicit SedaState(SedaParams p = {}) : params(p), admit_rate(p.ceiling) {}
};

// Additive-increase / multiplicative-decrease on the 90th-percentile
// response time of the closing window. Returns the new admit rate.
double seda_on_window(SedaState& state, Duration observed_90p);

Duration percentile_90(std::vector<Duration> samples);

// Token bucket enforcing the admit rate at arrival.
class TokenBucket {
 public:
  explicit TokenBucket(double rate = 1.0, Duration burst = std::chrono::milliseconds{10});
  void set_rate(double rate, Timestamp now);
  bool try_acquire(Timestamp now);
  double rate() const { return rate_; }

 private:
  void refill(Timestamp now);
  double capacity() const;

  double rate_;
  Duration burst_;
  double tokens_;
  Timestamp last_{};
};

}  // namespace dagor
