#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dagor/sim_config.hpp"

namespace dagor {

struct TaskTypeMetrics {
  int x = 1;
  std::uint64_t issued = 0;
  std::uint64_t succeeded = 0;
  double success_rate() const {
    return issued ? static_cast<double>(succeeded) / static_cast<double>(issued) : 0.0;
  }
};

struct ServiceMetrics {
  std::string name;
  std::uint64_t arrivals = 0;
  std::uint64_t admitted = 0;
  std::uint64_t rejected_busy = 0;   // turned away at arrival (policy or full queue)
  std::uint64_t dropped = 0;         // admitted, then dropped at dequeue
  std::uint64_t served = 0;          // processing started
  std::uint64_t shed_local_upstream = 0;
  std::uint64_t timeouts = 0;        // calls to this service that timed out
  double busy_ms = 0.0;
  double wasted_service_ms = 0.0;    // worker time spent on tasks that failed
  double avg_queuing_ms = 0.0;
  std::vector<double> queuing_ms_per_second;  // mean wait in each measured second
  double avg_level_b = -1.0;         // time-weighted; -1 when the policy has no level
  double avg_level_u = -1.0;
};

struct LevelSample {
  double time_ms = 0.0;
  int server = 0;
  AdmissionLevel level;
};

struct MetricsReport {
  std::vector<TaskTypeMetrics> task_types;  // one per distinct x, ascending
  std::vector<ServiceMetrics> services;
  std::vector<LevelSample> level_trace;
  std::uint64_t issued = 0;
  std::uint64_t succeeded = 0;
  std::uint64_t events = 0;
  std::uint64_t trace_hash = 0;

  double success_rate() const {
    return issued ? static_cast<double>(succeeded) / static_cast<double>(issued) : 0.0;
  }
  const ServiceMetrics& service(std::string_view name) const;
  const TaskTypeMetrics* task_type(int x) const;
};

// Observation hooks for audits in tests and tools.
enum class TraceKind {
  kSend,          // request left the caller toward `server`
  kShedLocal,     // caller shed the request against its stored level
  kArrive,        // request reached `server`
  kReject,        // server turned it away at arrival
  kDrop,          // server dropped it at dequeue
  kStart,         // processing started
  kResponse,      // caller received a response from `server`
  kTimeout,
  kLevelChange,   // `server`'s admission level changed to `level`
};

struct TraceEvent {
  Timestamp time{};
  TraceKind kind{};
  int server = -1;  // the callee / acting server
  int caller = -1;  // caller server, -1 for the workload generator
  std::uint64_t task_id = 0;
  int attempt = 0;
  AdmissionLevel priority;                // request (b, u)
  std::optional<AdmissionLevel> level;    // piggyback / stored / new level
  Outcome outcome = Outcome::kSuccess;
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct ServerInfo {
  int service = 0;
  int replica = 0;
};

class Sim {
 public:
  explicit Sim(SimConfig config);
  ~Sim();
  Sim(Sim&&) noexcept;
  Sim& operator=(Sim&&) noexcept;

  void set_trace(TraceSink sink);
  MetricsReport run();

  const SimConfig& config() const;
  std::size_t server_count() const;
  ServerInfo server_info(int server) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Validates and builds. Throws ConfigError on invalid configuration.
Sim build_scenario(SimConfig config);
MetricsReport run(Sim& sim);

// Best success rate achievable at feed f when the target saturates at f_sat.
double optimal_success(double f_sat, double f);

}  // namespace dagor
