#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagor/sim.hpp"

namespace dagor {

enum class PlanName { kDetectFig5, kSweepFig7, kTypesFig8, kFairnessFig9, kCustom };
enum class Workload { kM1, kM2, kM3, kM4, kMixed };

std::string_view to_string(PlanName name);
std::optional<PlanName> parse_plan_name(std::string_view text);
std::string_view to_string(Workload workload);
std::optional<Workload> parse_workload(std::string_view text);

// One policy configuration under test. `label` names it in the output.
struct PolicyVariant {
  std::string label;
  PolicyKind kind = PolicyKind::kDagorQ;
  std::optional<double> response_threshold_ms;  // dagor_r only
};

struct ExperimentPlan {
  PlanName name = PlanName::kCustom;
  std::vector<double> feeds;
  std::vector<PolicyVariant> policies;
  std::vector<Workload> workloads;
  std::vector<std::uint64_t> seeds;
  SimConfig base;
  // Draw business priorities uniformly from [0, random_b_max] per task.
  std::optional<std::uint16_t> random_b_max;

  void validate() const;
};

struct PlanOptions {
  std::optional<Workload> workload;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_path;
  std::vector<std::string> policies;           // empty = plan default
  std::vector<double> response_thresholds_ms;  // detect plan; empty = 150/250/350
  std::optional<int> repetitions;
};

inline constexpr int kDefaultRepetitions = 5;
// Response-path I/O of the overloaded service in the detection plan: base
// latency plus a per-in-flight contention term, so response time climbs with
// load well before the worker queue does.
inline constexpr double kDetectIoLatencyMs = 117.0;
inline constexpr double kDetectIoContentionMs = 2.5;
// Built-in plans start fully open; this covers the controllers' settling time.
inline constexpr Duration kPlanWarmup = std::chrono::seconds{120};

ExperimentPlan builtin_plan(PlanName name, const PlanOptions& options = {});
std::vector<PolicyVariant> parse_policy_list(std::string_view list);
// The concrete scenario for one grid point of a plan.
SimConfig scenario_for(const ExperimentPlan& plan, const PolicyVariant& policy, Workload workload,
                       double feed, std::uint64_t seed);

struct RunResult {
  std::string policy;
  Workload workload = Workload::kM1;
  double feed_qps = 0.0;
  std::uint64_t seed = 0;
  double f_sat = 0.0;
  MetricsReport metrics;

  // Rejections anywhere (busy, dropped, shed upstream) per request attempt.
  double rejection_rate() const;
};

// Runs every grid point on a pool of `threads` workers. Results come back in
// grid order (policy, workload, feed, seed) regardless of scheduling.
std::vector<RunResult> execute_plan(const ExperimentPlan& plan, int threads);

struct SummaryRow {
  std::string experiment;
  std::string policy;
  std::string workload_type;
  double feed_qps = 0.0;
  double success_rate = 0.0;
  double optimal_rate = 0.0;
  double wasted_service_ms = 0.0;
  double avg_level_b = -1.0;
  double avg_level_u = -1.0;
};

inline constexpr std::string_view kSummaryHeader =
    "experiment,policy,workload_type,feed_qps,success_rate,optimal_rate,wasted_service_ms,"
    "avg_level_b,avg_level_u";
inline constexpr std::string_view kRunHeader =
    "seed,workload_type,feed_qps,issued,succeeded,success_rate,optimal_rate,arrivals,admitted,"
    "rejected_busy,dropped,shed_local_upstream,timeouts,rejection_rate,wasted_service_ms,"
    "avg_queuing_ms,avg_level_b,avg_level_u";
inline constexpr std::string_view kOnsetHeader = "policy,onset_qps,f_sat";

// Seed-averaged rows, one per (policy, task type, feed).
std::vector<SummaryRow> summarize_results(const ExperimentPlan& plan,
                                          const std::vector<RunResult>& results);

struct OnsetRow {
  std::string policy;
  std::optional<double> onset_qps;  // first feed with nonzero rejection rate
  double f_sat = 0.0;
};
std::vector<OnsetRow> shedding_onsets(const ExperimentPlan& plan, const std::vector<RunResult>& results);

// Writes per-(policy, feed) CSVs, summary.csv and, for the detection plan,
// onset.csv. Throws std::runtime_error when the directory is unusable.
void write_outputs(const ExperimentPlan& plan, const std::vector<RunResult>& results,
                   const std::filesystem::path& out_dir);

// Returns the process exit status; messages go to `log`.
int run_plan(const ExperimentPlan& plan, const std::filesystem::path& out_dir, int threads,
             std::ostream& log);

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& file);
// Prints aggregates for a run_plan output directory. Returns exit status.
int summarize(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

// Worker count from DAGOR_LAB_THREADS, else hardware concurrency.
int default_thread_count();

}  // namespace dagor
