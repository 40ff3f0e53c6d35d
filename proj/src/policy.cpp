#include "dagor/policy.hpp"

#include <stdexcept>
#include <vector>

namespace dagor {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kNone: return "none";
    case PolicyKind::kDagorQ: return "dagor_q";
    case PolicyKind::kDagorR: return "dagor_r";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kCodel: return "codel";
    case PolicyKind::kSeda: return "seda";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view text) {
  if (text == "none") return PolicyKind::kNone;
  if (text == "dagor_q" || text == "dagor") return PolicyKind::kDagorQ;
  if (text == "dagor_r") return PolicyKind::kDagorR;
  if (text == "random") return PolicyKind::kRandom;
  if (text == "codel") return PolicyKind::kCodel;
  if (text == "seda") return PolicyKind::kSeda;
  return std::nullopt;
}

namespace {

class PassThroughPolicy final : public ServerPolicy {
 public:
  PolicyKind kind() const override { return PolicyKind::kNone; }
  ArrivalDecision on_request_arrival(const RequestEnvelope&, Timestamp) override {
    return ArrivalDecision::kEnqueue;
  }
};

class DagorPolicy final : public ServerPolicy {
 public:
  DagorPolicy(PolicyKind kind, const PolicyConfig& config, Timestamp start)
      : kind_(kind), gate_(config.domain, window_for(kind, config.window), config.admission,
                          config.gate, start) {}

  PolicyKind kind() const override { return kind_; }

  ArrivalDecision on_request_arrival(const RequestEnvelope& req, Timestamp now) override {
    return gate_.on_request_arrival(req, now);
  }
  void on_processing_start(const RequestEnvelope& req, Timestamp now) override {
    gate_.on_processing_start(req, now);
  }
  void on_response_sent(const RequestEnvelope& req, Timestamp now) override {
    gate_.on_response_sent(req, now);
  }
  void on_poll(Timestamp now) override { gate_.poll(now); }
  Timestamp next_poll(Timestamp now) const override {
    const Timestamp deadline = gate_.window_deadline();
    return deadline > now ? deadline : now + gate_.monitor().config().interval;
  }
  SendDecision before_send_downstream(int target, RequestEnvelope& req) override {
    return gate_.before_send_downstream(target, req);
  }
  void on_response_receive(int target, const ResponseEnvelope& resp) override {
    gate_.on_response_receive(target, resp);
  }
  std::optional<AdmissionLevel> level() const override { return gate_.level(); }

  const Gate& gate() const { return gate_; }

 private:
  static WindowConfig window_for(PolicyKind kind, WindowConfig window) {
    window.mode = kind == PolicyKind::kDagorR ? DetectionMode::kResponseTime
                                              : DetectionMode::kQueuingTime;
    return window;
  }

  PolicyKind kind_;
  Gate gate_;
};

class RandomPolicy final : public ServerPolicy {
 public:
  RandomPolicy(const PolicyConfig& config, int workers, std::uint64_t seed, Timestamp start)
      : estimator_(config.random, workers), rng_(seed), next_close_(start + config.random.window) {}

  PolicyKind kind() const override { return PolicyKind::kRandom; }

  ArrivalDecision on_request_arrival(const RequestEnvelope&, Timestamp) override {
    estimator_.on_arrival();
    const double p = estimator_.shed_probability();
    if (random_shed_decision(p > 0.0, p, rng_) == ShedDecision::kReject) {
      return ArrivalDecision::kRejectBusy;
    }
    ++backlog_;
    return ArrivalDecision::kEnqueue;
  }
  void on_processing_start(const RequestEnvelope&, Timestamp) override { --backlog_; }
  void on_processing_done(const RequestEnvelope&, Duration busy, Timestamp) override {
    estimator_.on_completion(busy);
  }
  void on_poll(Timestamp now) override {
    if (now < next_close_) return;
    estimator_.close_window(backlog_);
    next_close_ = now + estimator_.params().window;
  }
  Timestamp next_poll(Timestamp) const override { return next_close_; }

 private:
  RandomShedEstimator estimator_;
  Rng rng_;
  Timestamp next_close_;
  std::size_t backlog_ = 0;
};

class CodelPolicy final : public ServerPolicy {
 public:
  explicit CodelPolicy(const PolicyConfig& config) : state_(config.codel) {}

  PolicyKind kind() const override { return PolicyKind::kCodel; }
  ArrivalDecision on_request_arrival(const RequestEnvelope&, Timestamp) override {
    return ArrivalDecision::kEnqueue;
  }
  DequeueDecision on_dequeue(const RequestEnvelope& req, Timestamp now,
                             std::size_t remaining) override {
    return state_.on_dequeue(now - req.arrival_time, now, remaining == 0);
  }
  Timestamp next_poll(Timestamp now) const override { return now + std::chrono::hours{1}; }

 private:
  CoDelState state_;
};

class SedaPolicy final : public ServerPolicy {
 public:
  SedaPolicy(const PolicyConfig& config, Timestamp start)
      : state_(config.seda),
        bucket_(state_.admit_rate, config.seda.burst),
        window_start_(start) {}

  PolicyKind kind() const override { return PolicyKind::kSeda; }

  ArrivalDecision on_request_arrival(const RequestEnvelope&, Timestamp now) override {
    return bucket_.try_acquire(now) ? ArrivalDecision::kEnqueue : ArrivalDecision::kRejectBusy;
  }
  void on_response_sent(const RequestEnvelope& req, Timestamp now) override {
    samples_.push_back(now - req.arrival_time);
    if (samples_.size() >= state_.params.window_samples) close(now);
  }
  void on_poll(Timestamp now) override {
    if (now - window_start_ >= state_.params.window) close(now);
  }
  Timestamp next_poll(Timestamp now) const override {
    const Timestamp deadline = window_start_ + state_.params.window;
    return deadline > now ? deadline : now + state_.params.window;
  }

 private:
  void close(Timestamp now) {
    // An idle window carries no evidence either way.
    if (!samples_.empty()) {
      seda_on_window(state_, percentile_90(std::move(samples_)));
      bucket_.set_rate(state_.admit_rate, now);
    }
    samples_.clear();
    window_start_ = now;
  }

  SedaState state_;
  TokenBucket bucket_;
  Timestamp window_start_;
  std::vector<Duration> samples_;
};

}  // namespace

std::unique_ptr<ServerPolicy> make_policy(const PolicyConfig& config, int workers,
                                          std::uint64_t seed, Timestamp start) {
  switch (config.kind) {
    case PolicyKind::kNone: return std::make_unique<PassThroughPolicy>();
    case PolicyKind::kDagorQ:
    case PolicyKind::kDagorR: return std::make_unique<DagorPolicy>(config.kind, config, start);
    case PolicyKind::kRandom: return std::make_unique<RandomPolicy>(config, workers, seed, start);
    case PolicyKind::kCodel: return std::make_unique<CodelPolicy>(config);
    case PolicyKind::kSeda: return std::make_unique<SedaPolicy>(config, start);
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace dagor
