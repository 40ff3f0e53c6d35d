#include "dagor/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dagor {

std::string_view to_string(PlanName name) {
  switch (name) {
    case PlanName::kDetectFig5: return "detect_fig5";
    case PlanName::kSweepFig7: return "sweep_fig7";
    case PlanName::kTypesFig8: return "types_fig8";
    case PlanName::kFairnessFig9: return "fairness_fig9";
    case PlanName::kCustom: return "custom";
  }
  return "unknown";
}

std::optional<PlanName> parse_plan_name(std::string_view text) {
  for (PlanName n : {PlanName::kDetectFig5, PlanName::kSweepFig7, PlanName::kTypesFig8,
                     PlanName::kFairnessFig9, PlanName::kCustom}) {
    if (text == to_string(n)) return n;
  }
  return std::nullopt;
}

std::string_view to_string(Workload workload) {
  switch (workload) {
    case Workload::kM1: return "m1";
    case Workload::kM2: return "m2";
    case Workload::kM3: return "m3";
    case Workload::kM4: return "m4";
    case Workload::kMixed: return "mixed";
  }
  return "unknown";
}

std::optional<Workload> parse_workload(std::string_view text) {
  for (Workload w : {Workload::kM1, Workload::kM2, Workload::kM3, Workload::kM4, Workload::kMixed}) {
    if (text == to_string(w)) return w;
  }
  return std::nullopt;
}

namespace {

std::vector<double> feed_range(double from, double to, double step) {
  std::vector<double> feeds;
  for (double f = from; f <= to + 1e-9; f += step) feeds.push_back(f);
  return feeds;
}

std::string type_label(int x) { return "m" + std::to_string(x); }

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

std::vector<PolicyVariant> parse_policy_list(std::string_view list) {
  std::vector<PolicyVariant> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string item{list.substr(pos, comma - pos)};
    pos = comma + 1;
    if (item.empty()) continue;
    PolicyVariant v;
    v.label = item;
    std::string kind_text = item;
    if (auto at = item.find('@'); at != std::string::npos) {
      kind_text = item.substr(0, at);
      v.response_threshold_ms = std::stod(item.substr(at + 1));
    }
    auto kind = parse_policy_kind(kind_text);
    if (!kind) throw std::invalid_argument("unknown policy '" + item + "'");
    v.kind = *kind;
    out.push_back(v);
  }
  return out;
}

void ExperimentPlan::validate() const {
  if (feeds.empty()) throw std::invalid_argument("plan has no feed rates");
  if (policies.empty()) throw std::invalid_argument("plan has no policies");
  if (workloads.empty()) throw std::invalid_argument("plan has no workloads");
  if (seeds.empty()) throw std::invalid_argument("plan has no seeds");
  for (double f : feeds)
    if (!(f > 0.0)) throw std::invalid_argument("feed rates must be > 0");
  base.validate();
}

ExperimentPlan builtin_plan(PlanName name, const PlanOptions& options) {
  ExperimentPlan plan;
  plan.name = name;
  plan.base = default_scenario();
  plan.base.warmup = kPlanWarmup;
  if (name == PlanName::kDetectFig5) {
    // Constant-rate arrivals keep the saturation knee sharp.
    plan.base.task.arrival = ArrivalProcess::kUniform;
    const int m = plan.base.service_index(plan.base.task.target);
    if (m >= 0) {
      plan.base.services[m].io_latency_ms = kDetectIoLatencyMs;
      plan.base.services[m].io_contention_ms = kDetectIoContentionMs;
    }
  }
  if (options.config_path) plan.base = load_config_file(*options.config_path, plan.base);

  const std::uint64_t first_seed = options.seed.value_or(1);
  const int reps = options.repetitions.value_or(kDefaultRepetitions);
  for (int i = 0; i < reps; ++i) plan.seeds.push_back(first_seed + static_cast<std::uint64_t>(i));

  std::vector<PolicyVariant> defaults;
  switch (name) {
    case PlanName::kDetectFig5: {
      plan.feeds = feed_range(250, 1500, 25);
      plan.workloads = {options.workload.value_or(Workload::kM1)};
      defaults.push_back({"dagor_q", PolicyKind::kDagorQ, std::nullopt});
      std::vector<double> thresholds = options.response_thresholds_ms;
      if (thresholds.empty()) thresholds = {150, 250, 350};
      for (double t : thresholds) {
        defaults.push_back({"dagor_r@" + format_double(t), PolicyKind::kDagorR, t});
      }
      break;
    }
    case PlanName::kSweepFig7:
      plan.feeds = feed_range(250, 1500, 250);
      plan.workloads = {options.workload.value_or(Workload::kM1)};
      defaults = parse_policy_list("dagor_q,codel,seda,random");
      break;
    case PlanName::kTypesFig8:
      plan.feeds = {1500};
      plan.workloads = options.workload ? std::vector<Workload>{*options.workload}
                                        : std::vector<Workload>{Workload::kM1, Workload::kM2,
                                                                Workload::kM3, Workload::kM4};
      defaults = parse_policy_list("dagor_q,codel,seda,random");
      break;
    case PlanName::kFairnessFig9:
      plan.feeds = feed_range(250, 2750, 250);
      plan.workloads = {options.workload.value_or(Workload::kMixed)};
      defaults = parse_policy_list("dagor_q,codel");
      plan.random_b_max = 7;
      break;
    case PlanName::kCustom:
      plan.feeds = {plan.base.task.feed_qps > 0 ? plan.base.task.feed_qps : 750.0};
      plan.workloads = {options.workload.value_or(Workload::kM1)};
      defaults = parse_policy_list("dagor_q");
      break;
  }
  plan.policies = defaults;
  if (!options.policies.empty()) {
    plan.policies.clear();
    for (const auto& p : options.policies) {
      auto parsed = parse_policy_list(p);
      plan.policies.insert(plan.policies.end(), parsed.begin(), parsed.end());
    }
  }
  return plan;
}

SimConfig scenario_for(const ExperimentPlan& plan, const PolicyVariant& policy, Workload workload,
                       double feed, std::uint64_t seed) {
  SimConfig config = plan.base;
  config.seed = seed;
  config.task.feed_qps = feed;
  switch (workload) {
    case Workload::kM1: config.task.mix = {{1, 1.0}}; break;
    case Workload::kM2: config.task.mix = {{2, 1.0}}; break;
    case Workload::kM3: config.task.mix = {{3, 1.0}}; break;
    case Workload::kM4: config.task.mix = {{4, 1.0}}; break;
    case Workload::kMixed: config.task.mix = {{1, 1.0}, {2, 1.0}, {3, 1.0}, {4, 1.0}}; break;
  }
  if (plan.random_b_max) {
    config.task.actions.clear();
    config.task.priorities.clear();
    for (std::uint16_t b = 0; b <= *plan.random_b_max; ++b) {
      const std::string action = "action" + std::to_string(b);
      config.task.actions.push_back(action);
      config.task.priorities.emplace_back(action, b);
    }
  }
  // DAGOR runs everywhere (upstream gates shed on behalf of downstreams);
  // the other policies guard only the overloaded service.
  const bool everywhere = policy.kind == PolicyKind::kDagorQ || policy.kind == PolicyKind::kDagorR;
  for (auto& s : config.services) {
    s.policy.kind = (everywhere || s.name == config.task.target) ? policy.kind : PolicyKind::kNone;
    if (policy.response_threshold_ms) s.policy.window.response_threshold = from_ms(*policy.response_threshold_ms);
  }
  return config;
}

double RunResult::rejection_rate() const {
  std::uint64_t rejected = 0;
  std::uint64_t attempts = 0;
  for (const auto& s : metrics.services) {
    rejected += s.rejected_busy + s.dropped + s.shed_local_upstream;
    attempts += s.arrivals + s.shed_local_upstream;
  }
  return attempts ? static_cast<double>(rejected) / static_cast<double>(attempts) : 0.0;
}

int default_thread_count() {
  if (const char* env = std::getenv("DAGOR_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunResult> execute_plan(const ExperimentPlan& plan, int threads) {
  plan.validate();
  struct Job {
    const PolicyVariant* policy;
    Workload workload;
    double feed;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& p : plan.policies)
    for (Workload w : plan.workloads)
      for (double f : plan.feeds)
        for (std::uint64_t s : plan.seeds) jobs.push_back({&p, w, f, s});

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size() && !failed; i = next++) {
      try {
        const Job& job = jobs[i];
        SimConfig config = scenario_for(plan, *job.policy, job.workload, job.feed, job.seed);
        RunResult r;
        r.policy = job.policy->label;
        r.workload = job.workload;
        r.feed_qps = job.feed;
        r.seed = job.seed;
        r.f_sat = config.target_saturated_throughput();
        Sim sim = build_scenario(std::move(config));
        r.metrics = sim.run();
        results[i] = std::move(r);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(1, jobs.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<SummaryRow> summarize_results(const ExperimentPlan& plan,
                                          const std::vector<RunResult>& results) {
  struct Acc {
    double success = 0, wasted = 0, level_b = 0, level_u = 0, optimal = 0;
    int n = 0;
  };
  // Keyed in emission order: policy, workload type, feed.
  std::map<std::tuple<std::size_t, int, std::size_t>, Acc> acc;
  auto policy_pos = [&](const std::string& label) {
    for (std::size_t i = 0; i < plan.policies.size(); ++i)
      if (plan.policies[i].label == label) return i;
    return plan.policies.size();
  };
  auto feed_pos = [&](double f) {
    return static_cast<std::size_t>(std::find(plan.feeds.begin(), plan.feeds.end(), f) - plan.feeds.begin());
  };
  for (const auto& r : results) {
    const auto& target = r.metrics.service(plan.base.task.target);
    for (const auto& t : r.metrics.task_types) {
      Acc& a = acc[{policy_pos(r.policy), t.x, feed_pos(r.feed_qps)}];
      a.success += t.success_rate();
      a.wasted += target.wasted_service_ms;
      a.level_b += target.avg_level_b;
      a.level_u += target.avg_level_u;
      a.optimal = optimal_success(r.f_sat, r.feed_qps);
      ++a.n;
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, a] : acc) {
    const auto& [p, x, f] = key;
    SummaryRow row;
    row.experiment = std::string{to_string(plan.name)};
    row.policy = plan.policies[p].label;
    row.workload_type = type_label(x);
    row.feed_qps = plan.feeds[f];
    row.success_rate = a.success / a.n;
    row.optimal_rate = a.optimal;
    row.wasted_service_ms = a.wasted / a.n;
    row.avg_level_b = a.level_b / a.n;
    row.avg_level_u = a.level_u / a.n;
    rows.push_back(row);
  }
  return rows;
}

std::vector<OnsetRow> shedding_onsets(const ExperimentPlan& plan, const std::vector<RunResult>& results) {
  std::vector<OnsetRow> rows;
  for (const auto& p : plan.policies) {
    OnsetRow row;
    row.policy = p.label;
    for (double f : plan.feeds) {
      bool any = false;
      for (const auto& r : results) {
        if (r.policy == p.label && r.feed_qps == f) {
          row.f_sat = r.f_sat;
          any = any || r.rejection_rate() > 0.0;
        }
      }
      if (any) {
        row.onset_qps = f;
        break;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

void write_run_csv(const std::filesystem::path& file, const std::vector<const RunResult*>& runs,
                   const std::string& target) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << kRunHeader << '\n';
  for (const RunResult* r : runs) {
    const auto& m = r->metrics.service(target);
    for (const auto& t : r->metrics.task_types) {
      out << r->seed << ',' << type_label(t.x) << ',' << format_double(r->feed_qps) << ','
          << t.issued << ',' << t.succeeded << ',' << format_double(t.success_rate()) << ','
          << format_double(optimal_success(r->f_sat, r->feed_qps)) << ',' << m.arrivals << ','
          << m.admitted << ',' << m.rejected_busy << ',' << m.dropped << ','
          << m.shed_local_upstream << ',' << m.timeouts << ',' << format_double(r->rejection_rate())
          << ',' << format_double(m.wasted_service_ms) << ',' << format_double(m.avg_queuing_ms)
          << ',' << format_double(m.avg_level_b) << ',' << format_double(m.avg_level_u) << '\n';
    }
  }
}

}  // namespace

void write_outputs(const ExperimentPlan& plan, const std::vector<RunResult>& results,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory " + out_dir.string());
  }
  const std::string experiment{to_string(plan.name)};
  for (const auto& p : plan.policies) {
    for (double f : plan.feeds) {
      std::vector<const RunResult*> runs;
      for (const auto& r : results)
        if (r.policy == p.label && r.feed_qps == f) runs.push_back(&r);
      if (runs.empty()) continue;
      std::string label = p.label;
      std::replace(label.begin(), label.end(), '@', '-');
      const auto file = out_dir / (experiment + "_" + label + "_" + format_double(f) + ".csv");
      write_run_csv(file, runs, plan.base.task.target);
    }
  }
  std::ofstream summary(out_dir / "summary.csv");
  if (!summary) throw std::runtime_error("cannot write " + (out_dir / "summary.csv").string());
  summary << kSummaryHeader << '\n';
  for (const auto& row : summarize_results(plan, results)) {
    summary << row.experiment << ',' << row.policy << ',' << row.workload_type << ','
            << format_double(row.feed_qps) << ',' << format_double(row.success_rate) << ','
            << format_double(row.optimal_rate) << ',' << format_double(row.wasted_service_ms) << ','
            << format_double(row.avg_level_b) << ',' << format_double(row.avg_level_u) << '\n';
  }
  if (plan.name == PlanName::kDetectFig5) {
    std::ofstream onset(out_dir / "onset.csv");
    if (!onset) throw std::runtime_error("cannot write onset.csv");
    onset << kOnsetHeader << '\n';
    for (const auto& row : shedding_onsets(plan, results)) {
      onset << row.policy << ',' << (row.onset_qps ? format_double(*row.onset_qps) : "none") << ','
            << format_double(row.f_sat) << '\n';
    }
  }
}

int run_plan(const ExperimentPlan& plan, const std::filesystem::path& out_dir, int threads,
             std::ostream& log) {
  try {
    plan.validate();
    const auto results = execute_plan(plan, threads);
    write_outputs(plan, results, out_dir);
    log << to_string(plan.name) << ": " << results.size() << " runs written to " << out_dir.string()
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

// ---- summarize -------------------------------------------------------------

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw std::runtime_error(file.string() + ": unexpected header");
  }
  std::vector<SummaryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) {
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    }
    try {
      SummaryRow row;
      row.experiment = cells[0];
      row.policy = cells[1];
      row.workload_type = cells[2];
      row.feed_qps = std::stod(cells[3]);
      row.success_rate = std::stod(cells[4]);
      row.optimal_rate = std::stod(cells[5]);
      row.wasted_service_ms = std::stod(cells[6]);
      row.avg_level_b = std::stod(cells[7]);
      row.avg_level_u = std::stod(cells[8]);
      rows.push_back(row);
    } catch (const std::logic_error&) {
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

int summarize(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  const auto file = dir / "summary.csv";
  if (!std::filesystem::is_regular_file(file)) {
    err << "error: " << file.string() << " not found\n";
    return 1;
  }
  std::vector<SummaryRow> rows;
  try {
    rows = read_summary_csv(file);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (rows.empty()) {
    err << "error: " << file.string() << " has no rows\n";
    return 1;
  }
  out << std::fixed << std::setprecision(3);
  std::map<std::string, std::vector<const SummaryRow*>> by_experiment;
  for (const auto& r : rows) by_experiment[r.experiment].push_back(&r);

  for (const auto& [experiment, exp_rows] : by_experiment) {
    out << "== " << experiment << " ==\n";
    std::vector<std::string> policies;
    std::vector<double> feeds;
    std::vector<std::string> types;
    for (const auto* r : exp_rows) {
      if (std::find(policies.begin(), policies.end(), r->policy) == policies.end()) policies.push_back(r->policy);
      if (std::find(feeds.begin(), feeds.end(), r->feed_qps) == feeds.end()) feeds.push_back(r->feed_qps);
      if (std::find(types.begin(), types.end(), r->workload_type) == types.end()) types.push_back(r->workload_type);
    }
    auto find = [&](const std::string& p, const std::string& t, double f) -> const SummaryRow* {
      for (const auto* r : exp_rows)
        if (r->policy == p && r->workload_type == t && r->feed_qps == f) return r;
      return nullptr;
    };
    for (const auto& t : types) {
      for (double f : feeds) {
        out << t << " feed=" << f;
        for (const auto& p : policies)
          if (const auto* r = find(p, t, f)) out << ' ' << p << '=' << r->success_rate;
        if (const auto* any = find(policies.front(), t, f)) out << " optimal=" << any->optimal_rate;
        const SummaryRow* dagor = find("dagor_q", t, f);
        if (const SummaryRow* codel = find("codel", t, f); dagor && codel) {
          out << " gap=" << dagor->success_rate - codel->success_rate;
        }
        out << '\n';
      }
    }
    if (types.size() > 1) {
      for (const auto& p : policies) {
        double worst_spread = 0.0;
        for (double f : feeds) {
          double lo = 1.0, hi = 0.0;
          for (const auto& t : types) {
            if (const auto* r = find(p, t, f)) {
              lo = std::min(lo, r->success_rate);
              hi = std::max(hi, r->success_rate);
            }
          }
          if (hi >= lo) worst_spread = std::max(worst_spread, hi - lo);
        }
        out << "spread_" << (p == "dagor_q" ? std::string{"dagor"} : p) << '=' << worst_spread << '\n';
      }
    }
  }
  return 0;
}

}  // namespace dagor
