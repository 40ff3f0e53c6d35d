#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dagor/policy.hpp"
#include "dagor/priority.hpp"
#include "dagor/time.hpp"

namespace dagor {

enum class ServiceTimeKind { kDeterministic, kExponential };

struct ServiceTimeSpec {
  ServiceTimeKind kind = ServiceTimeKind::kDeterministic;
  double mean_ms = 1.0;
};

struct ServiceSpec {
  std::string name;
  int replicas = 1;
  int workers_per_replica = 1;
  ServiceTimeSpec service_time;
  std::optional<std::size_t> queue_capacity;  // nullopt = unbounded
  PolicyConfig policy;
  // Latency between the end of local processing and the response leaving
  // the server. It does not hold a worker.
  double io_latency_ms = 0.0;
  // Added to the latency above per request already in that phase on the
  // same server (shared I/O contention).
  double io_contention_ms = 0.0;
  // Worker time spent turning away a request (decode, reply).
  double reject_cost_ms = 0.05;

  // replicas * workers / mean service time, in requests per second.
  double saturated_throughput() const;
};

struct EdgeSpec {
  std::string from;
  std::string to;
  int calls = 1;
  // When set, the number of calls is the task's invocation count x.
  bool per_task = false;
};

struct TaskTypeSpec {
  int x = 1;
  double weight = 1.0;
};

enum class ArrivalProcess { kPoisson, kUniform };

struct TaskSpec {
  std::vector<TaskTypeSpec> mix{{1, 1.0}};
  // Offered load on the target service, in requests per second. The task
  // rate is feed_qps / E[x].
  double feed_qps = 0.0;
  ArrivalProcess arrival = ArrivalProcess::kPoisson;
  int max_retries = 3;
  // Stop issuing a request's remaining calls after the first failed one.
  bool abort_on_failure = false;
  std::string target = "M";
  // Actions drawn uniformly per task; the entry service maps them to
  // business priorities through `priorities`.
  std::vector<std::string> actions{"default"};
  std::vector<std::pair<std::string, std::uint16_t>> priorities{{"default", 0}};
  std::uint64_t user_population = 100000;
  Duration rotation_period = kDefaultRotationPeriod;

  double mean_x() const;
  double task_rate() const { return feed_qps / mean_x(); }
};

struct SimConfig {
  std::vector<ServiceSpec> services;
  std::vector<EdgeSpec> edges;
  TaskSpec task;
  PriorityDomain domain;
  Duration duration = std::chrono::seconds{60};  // measured span, after warmup
  Duration warmup = std::chrono::seconds{10};
  Duration network_delay = std::chrono::microseconds{500};
  Duration timeout = std::chrono::milliseconds{500};
  std::uint64_t seed = 1;

  // Throws ConfigError naming the first offending field.
  void validate() const;

  int service_index(std::string_view name) const;  // -1 if absent
  int entry_service() const;                        // the unique source
  double target_saturated_throughput() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Default two-tier scenario: entry service A (3 replicas) calling service M
// (3 replicas x 1 worker x 4 ms = 750 QPS saturated) x times per task.
SimConfig default_scenario();

// Applies every policy-related field of `policy` to all services.
void set_policy_everywhere(SimConfig& config, PolicyKind kind);

std::string_view to_string(ArrivalProcess process);

}  // namespace dagor

namespace dagor {

// Overlays a JSON document onto `config`. Keys that are absent keep their
// current values. Throws ConfigError on malformed input or unknown enums.
void apply_overrides(SimConfig& config, std::string_view json_text);
SimConfig load_config_file(const std::string& path, SimConfig base = default_scenario());

}  // namespace dagor
