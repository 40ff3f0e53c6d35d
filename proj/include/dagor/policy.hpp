#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dagor/admission.hpp"
#include "dagor/baselines.hpp"
#include "dagor/gate.hpp"
#include "dagor/load_monitor.hpp"
#include "dagor/priority.hpp"

namespace dagor {

enum class PolicyKind { kNone, kDagorQ, kDagorR, kRandom, kCodel, kSeda };

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy_kind(std::string_view text);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kNone;
  PriorityDomain domain;
  WindowConfig window;  // mode is forced by kind for dagor_q / dagor_r
  AdmissionParams admission;
  GateOptions gate;
  RandomShedParams random;
  CoDelParams codel;
  SedaParams seda;
};

// Decision surface shared by every overload-control policy bound to a
// simulated server. Hooks a policy does not need default to pass-through.
class ServerPolicy {
 public:
  virtual ~ServerPolicy() = default;

  virtual PolicyKind kind() const = 0;

  virtual ArrivalDecision on_request_arrival(const RequestEnvelope& req, Timestamp now) = 0;
  // Called when a worker takes the head of the queue; `remaining` is the
  // number of requests still queued behind it.
  virtual DequeueDecision on_dequeue(const RequestEnvelope& /*req*/, Timestamp /*now*/,
                                     std::size_t /*remaining*/) {
    return DequeueDecision::kDeliver;
  }
  virtual void on_processing_start(const RequestEnvelope& /*req*/, Timestamp /*now*/) {}
  virtual void on_processing_done(const RequestEnvelope& /*req*/, Duration /*busy*/,
                                  Timestamp /*now*/) {}
  virtual void on_response_sent(const RequestEnvelope& /*req*/, Timestamp /*now*/) {}

  virtual void on_poll(Timestamp /*now*/) {}
  virtual Timestamp next_poll(Timestamp now) const { return now + std::chrono::seconds{1}; }

  virtual SendDecision before_send_downstream(int /*target*/, RequestEnvelope& req) {
    req.shed_report.clear();
    return SendDecision::kSend;
  }
  virtual void on_response_receive(int /*target*/, const ResponseEnvelope& /*resp*/) {}

  // Level piggybacked on responses; policies without one return nullopt.
  virtual std::optional<AdmissionLevel> level() const { return std::nullopt; }
};

// `workers` is the worker count of the owning server; `seed` feeds policies
// that draw random numbers.
std::unique_ptr<ServerPolicy> make_policy(const PolicyConfig& config, int workers,
                                          std::uint64_t seed, Timestamp start = kTimeZero);

}  // namespace dagor
