#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dagor/sim_config.hpp"

using namespace dagor;
using namespace std::chrono_literals;

namespace {

std::string error_of(const SimConfig& c) {
  try {
    c.validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(SimConfig, DefaultScenarioIsValid) {
  const SimConfig c = default_scenario();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.services.size(), 2u);
  EXPECT_DOUBLE_EQ(c.target_saturated_throughput(), 750.0);
  EXPECT_EQ(c.services[c.entry_service()].name, "A");
  EXPECT_EQ(c.timeout, 500ms);
  EXPECT_EQ(c.task.max_retries, 3);
}

TEST(SimConfig, SaturatedThroughput) {
  ServiceSpec s;
  s.replicas = 2;
  s.workers_per_replica = 4;
  s.service_time.mean_ms = 8;
  EXPECT_DOUBLE_EQ(s.saturated_throughput(), 1000.0);
}

TEST(SimConfig, CycleIsRejected) {
  SimConfig c = default_scenario();
  c.edges.push_back({"M", "A", 1, false});
  EXPECT_NE(error_of(c).find("cycle"), std::string::npos);
}

TEST(SimConfig, ErrorsNameTheField) {
  SimConfig c = default_scenario();
  c.services[1].replicas = 0;
  EXPECT_NE(error_of(c).find("service.M.replicas"), std::string::npos);

  c = default_scenario();
  c.task.feed_qps = -1;
  EXPECT_NE(error_of(c).find("task.feed_qps"), std::string::npos);

  c = default_scenario();
  c.edges.push_back({"A", "Z", 1, false});
  EXPECT_NE(error_of(c).find("'Z'"), std::string::npos);

  c = default_scenario();
  c.task.mix = {{0, 1.0}};
  EXPECT_NE(error_of(c).find("task.mix"), std::string::npos);

  c = default_scenario();
  c.services[0].policy.window.max_samples = 0;
  EXPECT_NE(error_of(c).find("service.A"), std::string::npos);
}

TEST(SimConfig, TwoEntriesRejected) {
  SimConfig c = default_scenario();
  ServiceSpec extra = c.services[1];
  extra.name = "B";
  c.services.push_back(extra);
  EXPECT_NE(error_of(c).find("entry"), std::string::npos);
}

TEST(SimConfig, OverridesApply) {
  SimConfig c = default_scenario();
  apply_overrides(c, R"({
    "duration_s": 5, "warmup_s": 1, "seed": 9, "timeout_ms": 200,
    "task": {"feed_qps": 300, "max_retries": 0, "arrival": "uniform",
             "mix": [{"x": 2, "weight": 1}]},
    "service": {"M": {"replicas": 2, "io_latency_ms": 3}},
    "admission": {"alpha": 0.1, "collaborative": false},
    "window": {"queuing_threshold_ms": 30}
  })");
  EXPECT_EQ(c.duration, 5s);
  EXPECT_EQ(c.warmup, 1s);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.timeout, 200ms);
  EXPECT_DOUBLE_EQ(c.task.feed_qps, 300.0);
  EXPECT_EQ(c.task.max_retries, 0);
  EXPECT_EQ(c.task.arrival, ArrivalProcess::kUniform);
  EXPECT_EQ(c.task.mix.at(0).x, 2);
  const auto& m = c.services[c.service_index("M")];
  EXPECT_EQ(m.replicas, 2);
  EXPECT_DOUBLE_EQ(m.io_latency_ms, 3.0);
  for (const auto& s : c.services) {
    EXPECT_DOUBLE_EQ(s.policy.admission.alpha, 0.1);
    EXPECT_FALSE(s.policy.gate.collaborative);
    EXPECT_EQ(s.policy.window.queuing_threshold, 30ms);
  }
  EXPECT_NO_THROW(c.validate());
}

TEST(SimConfig, MalformedOverridesThrow) {
  SimConfig c = default_scenario();
  EXPECT_THROW(apply_overrides(c, "{not json"), ConfigError);
  EXPECT_THROW(apply_overrides(c, R"({"task": {"arrival": "bursty"}})"), ConfigError);
  EXPECT_THROW(apply_overrides(c, R"({"policy": "lifo"})"), ConfigError);
}

TEST(SimConfig, LoadConfigFile) {
  const auto path = std::filesystem::temp_directory_path() / "dagor_cfg_test.json";
  {
    std::ofstream out(path);
    out << R"({"task": {"feed_qps": 123}})";
  }
  const SimConfig c = load_config_file(path.string());
  EXPECT_DOUBLE_EQ(c.task.feed_qps, 123.0);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config_file((path.string() + ".missing")), ConfigError);
}

TEST(SimConfig, MeanXAndTaskRate) {
  SimConfig c = default_scenario();
  c.task.mix = {{1, 1.0}, {2, 1.0}, {3, 1.0}, {4, 1.0}};
  c.task.feed_qps = 2000;
  EXPECT_DOUBLE_EQ(c.task.mean_x(), 2.5);
  EXPECT_DOUBLE_EQ(c.task.task_rate(), 800.0);
}
