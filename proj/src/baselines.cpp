#include "dagor/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dagor {

ShedDecision random_shed_decision(bool overloaded, double shed_probability, Rng& rng) {
  if (!overloaded || shed_probability <= 0.0) return ShedDecision::kAdmit;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  return coin(rng) < shed_probability ? ShedDecision::kReject : ShedDecision::kAdmit;
}

RandomShedEstimator::RandomShedEstimator(RandomShedParams params, int workers)
    : params_(params), workers_(workers) {
  if (params_.window <= Duration::zero()) throw std::invalid_argument("random.window_ms must be > 0");
  if (workers_ <= 0) throw std::invalid_argument("workers must be > 0");
}

double RandomShedEstimator::close_window(std::size_t backlog) {
  const double window_s = to_seconds(params_.window);
  if (completions_ > 0 && busy_ > Duration::zero() && arrivals_ > 0) {
    const double capacity = static_cast<double>(completions_) * workers_ / to_seconds(busy_);
    const double target = capacity - static_cast<double>(backlog) / window_s;
    const double arrival_rate = static_cast<double>(arrivals_) / window_s;
    p_ = std::clamp(1.0 - target / arrival_rate, 0.0, 1.0);
  } else if (arrivals_ == 0) {
    p_ = 0.0;
  }
  arrivals_ = 0;
  completions_ = 0;
  busy_ = Duration::zero();
  return p_;
}

// ---- CoDel -----------------------------------------------------------------

CoDelState::CoDelState(CoDelParams params) : params_(params) {
  if (params_.target <= Duration::zero() || params_.interval <= Duration::zero()) {
    throw std::invalid_argument("codel target and interval must be > 0");
  }
}

Timestamp CoDelState::control_law(Timestamp t, std::uint32_t count) const {
  const double gap = static_cast<double>(params_.interval.count()) / std::sqrt(static_cast<double>(count));
  return t + Duration{static_cast<SimClock::rep>(gap)};
}

bool CoDelState::ok_to_drop(Duration sojourn, Timestamp now, bool queue_empty) {
  if (sojourn < params_.target || queue_empty) {
    first_above_time_ = Timestamp{};
    return false;
  }
  if (first_above_time_ == Timestamp{}) {
    first_above_time_ = now + params_.interval;
    return false;
  }
  return now >= first_above_time_;
}

DequeueDecision CoDelState::on_dequeue(Duration sojourn, Timestamp now, bool queue_empty) {
  const bool ok = ok_to_drop(sojourn, now, queue_empty);
  if (dropping_) {
    if (!ok) {
      dropping_ = false;
      return DequeueDecision::kDeliver;
    }
    if (now >= drop_next_) {
      ++count_;
      drop_next_ = control_law(drop_next_, count_);
      return DequeueDecision::kDrop;
    }
    return DequeueDecision::kDeliver;
  }
  if (ok) {
    dropping_ = true;
    const std::uint32_t delta = count_ - last_count_;
    count_ = (delta > 1 && now - drop_next_ < 16 * params_.interval) ? delta : 1;
    drop_next_ = control_law(now, count_);
    last_count_ = count_;
    return DequeueDecision::kDrop;
  }
  return DequeueDecision::kDeliver;
}

DequeueDecision codel_on_dequeue(CoDelState& state, Duration sojourn, Timestamp now,
                                 bool queue_empty) {
  return state.on_dequeue(sojourn, now, queue_empty);
}

// ---- SEDA ------------------------------------------------------------------

double seda_on_window(SedaState& state, Duration observed_90p) {
  const SedaParams& p = state.params;
  if (observed_90p > p.target_90p) {
    state.admit_rate *= p.decrease_factor;
  } else {
    state.admit_rate += p.additive_step;
  }
  state.admit_rate = std::clamp(state.admit_rate, p.min_rate, p.ceiling);
  return state.admit_rate;
}

Duration percentile_90(std::vector<Duration> samples) {
  if (samples.empty()) return Duration::zero();
  // Nearest-rank: the smallest sample with at least 90% of samples <= it.
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(samples.size())));
  const auto nth = samples.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(samples.begin(), nth, samples.end());
  return *nth;
}

TokenBucket::TokenBucket(double rate, Duration burst) : rate_(rate), burst_(burst) {
  if (rate_ <= 0.0) throw std::invalid_argument("token rate must be > 0");
  tokens_ = capacity();
}

double TokenBucket::capacity() const { return std::max(1.0, rate_ * to_seconds(burst_)); }

void TokenBucket::refill(Timestamp now) {
  if (now > last_) {
    tokens_ = std::min(capacity(), tokens_ + rate_ * to_seconds(now - last_));
    last_ = now;
  }
}

void TokenBucket::set_rate(double rate, Timestamp now) {
  if (rate <= 0.0) throw std::invalid_argument("token rate must be > 0");
  refill(now);
  rate_ = rate;
  tokens_ = std::min(tokens_, capacity());
}

bool TokenBucket::try_acquire(Timestamp now) {
  refill(now);
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

}  // namespace dagor
