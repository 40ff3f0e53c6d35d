#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dagor/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dagor-lab: overload control experiments on a simulated service graph"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a built-in experiment plan and write CSVs");
  std::string plan_name;
  std::string workload;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "results";
  std::string config_path;
  std::string policies;
  std::optional<int> reps;
  run->add_option("plan", plan_name, "detect_fig5 | sweep_fig7 | types_fig8 | fairness_fig9 | custom")
      ->required();
  run->add_option("--workload", workload, "m1 | m2 | m3 | m4 | mixed");
  run->add_option("--seed", seed, "First seed; repetitions use consecutive seeds");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--config", config_path, "JSON scenario overrides");
  run->add_option("--policies", policies, "Comma-separated policies, e.g. dagor_q,codel,dagor_r@250");
  run->add_option("--reps", reps, "Seeds per grid point")->check(CLI::PositiveNumber);

  auto* summ = app.add_subcommand("summarize", "Print aggregates for a results directory");
  std::string summ_dir;
  summ->add_option("dir", summ_dir, "Directory written by 'run'")->required();

  CLI11_PARSE(app, argc, argv);

  if (*summ) return dagor::summarize(summ_dir, std::cout, std::cerr);

  const auto name = dagor::parse_plan_name(plan_name);
  if (!name) {
    std::cerr << "error: unknown plan '" << plan_name << "'\n";
    return 2;
  }
  dagor::PlanOptions options;
  if (!workload.empty()) {
    options.workload = dagor::parse_workload(workload);
    if (!options.workload) {
      std::cerr << "error: unknown workload '" << workload << "'\n";
      return 2;
    }
  }
  options.seed = seed;
  options.repetitions = reps;
  if (!config_path.empty()) options.config_path = config_path;
  if (!policies.empty()) options.policies.push_back(policies);

  dagor::ExperimentPlan plan;
  try {
    plan = dagor::builtin_plan(*name, options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return dagor::run_plan(plan, out_dir, dagor::default_thread_count(), std::cerr);
}
