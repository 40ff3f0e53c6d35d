#include "dagor/sim_config.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dagor {

using nlohmann::json;

double ServiceSpec::saturated_throughput() const {
  return replicas * workers_per_replica * 1000.0 / service_time.mean_ms;
}

double TaskSpec::mean_x() const {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& t : mix) {
    weighted += t.x * t.weight;
    total += t.weight;
  }
  return total > 0.0 ? weighted / total : 1.0;
}

std::string_view to_string(ArrivalProcess process) {
  return process == ArrivalProcess::kPoisson ? "poisson" : "uniform";
}

int SimConfig::service_index(std::string_view name) const {
  for (std::size_t i = 0; i < services.size(); ++i) {
    if (services[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int SimConfig::entry_service() const {
  std::vector<bool> has_inbound(services.size(), false);
  for (const auto& e : edges) {
    if (int to = service_index(e.to); to >= 0) has_inbound[to] = true;
  }
  int entry = -1;
  for (std::size_t i = 0; i < services.size(); ++i) {
    if (!has_inbound[i]) {
      if (entry >= 0) return -1;
      entry = static_cast<int>(i);
    }
  }
  return entry;
}

double SimConfig::target_saturated_throughput() const {
  const int idx = service_index(task.target);
  return idx >= 0 ? services[idx].saturated_throughput() : 0.0;
}

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (services.empty()) fail("services: at least one service is required");
  std::set<std::string> names;
  for (const auto& s : services) {
    const std::string where = "service." + s.name;
    if (s.name.empty()) fail("services: service name must not be empty");
    if (!names.insert(s.name).second) fail(where + ": duplicate service name");
    if (s.replicas <= 0) fail(where + ".replicas must be > 0");
    if (s.workers_per_replica <= 0) fail(where + ".workers must be > 0");
    if (!(s.service_time.mean_ms > 0.0)) fail(where + ".service_time.mean_ms must be > 0");
    if (s.queue_capacity && *s.queue_capacity == 0) fail(where + ".queue_capacity must be > 0");
    if (s.io_latency_ms < 0.0) fail(where + ".io_latency_ms must be >= 0");
    if (s.io_contention_ms < 0.0) fail(where + ".io_contention_ms must be >= 0");
    if (s.reject_cost_ms < 0.0) fail(where + ".reject_cost_ms must be >= 0");
    if (s.policy.domain.b_max() != domain.b_max()) fail(where + ".policy: b_max mismatch");
    try {
      s.policy.window.validate();
      s.policy.admission.validate();
    } catch (const std::invalid_argument& e) {
      fail(where + ": " + e.what());
    }
  }
  for (const auto& e : edges) {
    if (service_index(e.from) < 0) fail("edges: unknown service '" + e.from + "'");
    if (service_index(e.to) < 0) fail("edges: unknown service '" + e.to + "'");
    if (!e.per_task && e.calls <= 0) fail("edges: calls must be > 0");
  }
  // Kahn's algorithm; leftover nodes sit on a cycle.
  std::vector<int> indegree(services.size(), 0);
  for (const auto& e : edges) ++indegree[service_index(e.to)];
  std::vector<int> ready;
  for (std::size_t i = 0; i < services.size(); ++i)
    if (indegree[i] == 0) ready.push_back(static_cast<int>(i));
  std::size_t visited = 0;
  while (!ready.empty()) {
    const int n = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& e : edges) {
      if (service_index(e.from) == n && --indegree[service_index(e.to)] == 0)
        ready.push_back(service_index(e.to));
    }
  }
  if (visited != services.size()) fail("edges: service graph contains a cycle");
  if (entry_service() < 0) fail("edges: exactly one entry service (no inbound edges) is required");

  if (task.feed_qps < 0.0) fail("task.feed_qps must be >= 0");
  if (task.mix.empty()) fail("task.mix must not be empty");
  for (const auto& t : task.mix) {
    if (t.x < 1) fail("task.mix: x must be >= 1");
    if (t.weight < 0.0) fail("task.mix: weight must be >= 0");
  }
  if (task.max_retries < 0) fail("task.max_retries must be >= 0");
  if (task.actions.empty()) fail("task.actions must not be empty");
  if (task.user_population == 0) fail("task.user_population must be > 0");
  if (task.rotation_period <= Duration::zero()) fail("task.rotation_period_s must be > 0");
  for (const auto& [action, b] : task.priorities)
    if (b > domain.b_max()) fail("priorities: '" + action + "' exceeds b_max");
  if (service_index(task.target) < 0) fail("task.target: unknown service '" + task.target + "'");
  if (duration <= Duration::zero()) fail("duration_s must be > 0");
  if (warmup < Duration::zero()) fail("warmup_s must be >= 0");
  if (network_delay < Duration::zero()) fail("network_delay_ms must be >= 0");
  if (timeout <= Duration::zero()) fail("timeout_ms must be > 0");
}

SimConfig default_scenario() {
  SimConfig config;
  ServiceSpec a;
  a.name = "A";
  a.replicas = 3;
  a.workers_per_replica = 8;
  a.service_time = {ServiceTimeKind::kDeterministic, 0.5};
  ServiceSpec m;
  m.name = "M";
  m.replicas = 3;
  m.workers_per_replica = 1;
  m.service_time = {ServiceTimeKind::kDeterministic, 4.0};
  config.services = {a, m};
  config.edges = {{"A", "M", 1, true}};
  config.task.target = "M";
  return config;
}

void set_policy_everywhere(SimConfig& config, PolicyKind kind) {
  for (auto& s : config.services) s.policy.kind = kind;
}

// ---- JSON overlay ----------------------------------------------------------

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

void read_ms(const json& j, const char* key, Duration& out) {
  if (auto it = j.find(key); it != j.end()) out = from_ms(it->get<double>());
}

void apply_window(const json& j, WindowConfig& w) {
  read_ms(j, "interval_ms", w.interval);
  read(j, "max_samples", w.max_samples);
  read_ms(j, "queuing_threshold_ms", w.queuing_threshold);
  read_ms(j, "response_threshold_ms", w.response_threshold);
  if (auto it = j.find("mode"); it != j.end()) {
    auto mode = parse_detection_mode(it->get<std::string>());
    if (!mode) throw ConfigError("window.mode: unknown mode '" + it->get<std::string>() + "'");
    w.mode = *mode;
  }
}

void apply_policy_params(const json& j, PolicyConfig& p) {
  if (auto it = j.find("window"); it != j.end()) apply_window(*it, p.window);
  if (auto it = j.find("admission"); it != j.end()) {
    read(*it, "alpha", p.admission.alpha);
    read(*it, "beta", p.admission.beta);
    read(*it, "collaborative", p.gate.collaborative);
    read(*it, "report_local_sheds", p.gate.report_local_sheds);
  }
  if (auto it = j.find("random"); it != j.end()) read_ms(*it, "window_ms", p.random.window);
  if (auto it = j.find("codel"); it != j.end()) {
    read_ms(*it, "target_ms", p.codel.target);
    read_ms(*it, "interval_ms", p.codel.interval);
  }
  if (auto it = j.find("seda"); it != j.end()) {
    read_ms(*it, "target_90p_ms", p.seda.target_90p);
    read(*it, "additive_step", p.seda.additive_step);
    read(*it, "decrease_factor", p.seda.decrease_factor);
    read(*it, "min_rate", p.seda.min_rate);
    read(*it, "ceiling", p.seda.ceiling);
    read_ms(*it, "window_ms", p.seda.window);
    read(*it, "window_samples", p.seda.window_samples);
  }
  if (auto it = j.find("policy"); it != j.end()) {
    auto kind = parse_policy_kind(it->get<std::string>());
    if (!kind) throw ConfigError("policy: unknown policy '" + it->get<std::string>() + "'");
    p.kind = *kind;
  }
}

void apply_service(const json& j, ServiceSpec& s) {
  read(j, "replicas", s.replicas);
  if (j.contains("workers")) read(j, "workers", s.workers_per_replica);
  read(j, "workers_per_replica", s.workers_per_replica);
  if (auto it = j.find("service_time"); it != j.end()) {
    if (auto k = it->find("kind"); k != it->end()) {
      const auto text = k->get<std::string>();
      if (text == "deterministic") s.service_time.kind = ServiceTimeKind::kDeterministic;
      else if (text == "exponential") s.service_time.kind = ServiceTimeKind::kExponential;
      else throw ConfigError("service." + s.name + ".service_time.kind: unknown '" + text + "'");
    }
    read(*it, "mean_ms", s.service_time.mean_ms);
  }
  if (auto it = j.find("queue_capacity"); it != j.end()) {
    if (it->is_null()) s.queue_capacity.reset();
    else s.queue_capacity = it->get<std::size_t>();
  }
  read(j, "io_latency_ms", s.io_latency_ms);
  read(j, "io_contention_ms", s.io_contention_ms);
  read(j, "reject_cost_ms", s.reject_cost_ms);
  apply_policy_params(j, s.policy);
}

ServiceSpec& find_or_add(SimConfig& config, const std::string& name) {
  if (int idx = config.service_index(name); idx >= 0) return config.services[idx];
  ServiceSpec s;
  s.name = name;
  s.policy.domain = config.domain;
  config.services.push_back(s);
  return config.services.back();
}

void apply_json(SimConfig& config, const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  if (auto it = j.find("b_max"); it != j.end()) {
    config.domain = PriorityDomain{it->get<std::uint16_t>()};
    for (auto& s : config.services) s.policy.domain = config.domain;
  }
  // Global policy parameters apply to every service; per-service blocks
  // below override them.
  for (auto& s : config.services) {
    const PolicyKind kind = s.policy.kind;
    apply_policy_params(j, s.policy);
    if (!j.contains("policy")) s.policy.kind = kind;
  }
  if (auto it = j.find("services"); it != j.end()) {
    for (const auto& sj : *it) apply_service(sj, find_or_add(config, sj.at("name").get<std::string>()));
  }
  if (auto it = j.find("service"); it != j.end()) {
    for (const auto& [name, sj] : it->items()) apply_service(sj, find_or_add(config, name));
  }
  if (auto it = j.find("edges"); it != j.end()) {
    config.edges.clear();
    for (const auto& ej : *it) {
      EdgeSpec e;
      e.from = ej.at("from").get<std::string>();
      e.to = ej.at("to").get<std::string>();
      if (auto c = ej.find("calls"); c != ej.end()) {
        if (c->is_string() && c->get<std::string>() == "x") e.per_task = true;
        else e.calls = c->get<int>();
      }
      config.edges.push_back(e);
    }
  }
  if (auto it = j.find("task"); it != j.end()) {
    TaskSpec& t = config.task;
    read(*it, "feed_qps", t.feed_qps);
    read(*it, "max_retries", t.max_retries);
    read(*it, "abort_on_failure", t.abort_on_failure);
    read(*it, "target", t.target);
    read(*it, "user_population", t.user_population);
    if (auto r = it->find("rotation_period_s"); r != it->end())
      t.rotation_period = from_ms(r->get<double>() * 1000.0);
    if (auto a = it->find("arrival"); a != it->end()) {
      const auto text = a->get<std::string>();
      if (text == "poisson") t.arrival = ArrivalProcess::kPoisson;
      else if (text == "uniform") t.arrival = ArrivalProcess::kUniform;
      else throw ConfigError("task.arrival: unknown process '" + text + "'");
    }
    if (auto m = it->find("mix"); m != it->end()) {
      t.mix.clear();
      for (const auto& mj : *m) t.mix.push_back({mj.at("x").get<int>(), mj.value("weight", 1.0)});
    }
    read(*it, "actions", t.actions);
  }
  if (auto it = j.find("priorities"); it != j.end()) {
    config.task.priorities.clear();
    for (const auto& [action, b] : it->items()) config.task.priorities.emplace_back(action, b.get<std::uint16_t>());
  }
  if (auto it = j.find("duration_s"); it != j.end()) config.duration = from_ms(it->get<double>() * 1000.0);
  if (auto it = j.find("warmup_s"); it != j.end()) config.warmup = from_ms(it->get<double>() * 1000.0);
  read_ms(j, "network_delay_ms", config.network_delay);
  read_ms(j, "timeout_ms", config.timeout);
  read(j, "seed", config.seed);
}

}  // namespace

void apply_overrides(SimConfig& config, std::string_view json_text) {
  try {
    apply_json(config, json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

SimConfig load_config_file(const std::string& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_overrides(base, buffer.str());
  return base;
}

}  // namespace dagor
