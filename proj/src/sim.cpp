#include "dagor/sim.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <random>
#include <stdexcept>

namespace dagor {

namespace {

struct Handle {
  std::uint32_t index = 0;
  std::uint32_t generation = 0;
};

// Slot allocator with generation counters, so events that outlive the
// object they refer to resolve to nullptr instead of a recycled slot.
template <typename T>
class SlotPool {
 public:
  Handle alloc(T value) {
    if (free_.empty()) {
      items_.push_back(std::move(value));
      generations_.push_back(1);
      return {static_cast<std::uint32_t>(items_.size() - 1), 1};
    }
    const std::uint32_t index = free_.back();
    free_.pop_back();
    items_[index] = std::move(value);
    return {index, generations_[index]};
  }

  T* get(Handle h) {
    if (h.index >= items_.size() || generations_[h.index] != h.generation) return nullptr;
    return &items_[h.index];
  }

  void release(Handle h) {
    if (get(h) == nullptr) return;
    ++generations_[h.index];
    free_.push_back(h.index);
  }

 private:
  std::vector<T> items_;
  std::vector<std::uint32_t> generations_;
  std::vector<std::uint32_t> free_;
};

constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class EventKind : std::uint8_t {
  kTaskArrival,
  kRequestArrival,
  kProcessingDone,
  kRejectDone,
  kResponseSend,
  kResponseArrival,
  kTimeout,
  kWindowPoll,
};

struct Event {
  Timestamp time;
  std::uint64_t seq;
  EventKind kind;
  Handle handle;
  int aux = 0;
};

struct EventOrder {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

struct Task {
  std::uint64_t id = 0;
  int x = 1;
  int type_index = 0;
  std::string action;
  std::string user;
  Timestamp issued{};
  bool measured = false;
  bool assigned = false;
  BusinessPriority b;
  UserPriority u;
  bool resolved = false;
  bool success = false;
  int target_attempts = 0;
  std::vector<std::int64_t> spent_us;  // per service
};

struct Invocation {
  Handle caller_record;  // request being processed at the caller
  bool from_generator = false;
  int caller_server = -1;
  int target_service = 0;
  std::uint64_t task = 0;
  int attempts = 0;
};

struct Record {
  int server = 0;
  Handle invocation;
  int attempt = 0;
  RequestEnvelope env;
  Outcome outcome = Outcome::kSuccess;
  std::optional<AdmissionLevel> piggyback;
  Duration service_time{};
  bool processed = false;
  // Downstream call progress once local processing is done.
  std::size_t edge_pos = 0;
  int call_pos = 0;
  bool failed = false;
  bool in_io = false;
};

struct OutEdge {
  int to = 0;
  int calls = 1;
  bool per_task = false;
};

struct Server {
  int service = 0;
  int replica = 0;
  int workers = 1;
  int busy = 0;
  int in_io = 0;
  std::deque<Handle> queue;
  std::deque<Handle> reject_queue;
  std::unique_ptr<ServerPolicy> policy;
  std::vector<std::uint64_t> round_robin;  // per downstream service
  std::optional<AdmissionLevel> last_level;
  Timestamp last_level_change{};
  double level_b_integral = 0.0;
  double level_u_integral = 0.0;
};

}  // namespace

struct Sim::Impl {
  SimConfig config;
  ActionPriorityTable table;
  std::vector<Server> servers;
  std::vector<int> first_server;  // per service
  std::vector<std::vector<OutEdge>> out_edges;
  int entry = 0;
  int target = 0;
  std::vector<int> type_of_x;  // task-type slot for each mix entry
  std::vector<int> distinct_x;

  std::priority_queue<Event, std::vector<Event>, EventOrder> events;
  std::uint64_t seq = 0;
  Timestamp now{};
  Timestamp measure_start{};
  Timestamp measure_end{};
  bool generating = true;
  std::uint64_t outstanding = 0;

  std::vector<Task> tasks;
  SlotPool<Invocation> invocations;
  SlotPool<Record> records;
  std::vector<std::uint64_t> generator_rr;

  Rng arrival_rng;
  Rng service_rng;
  Rng workload_rng;
  std::discrete_distribution<int> type_pick;

  MetricsReport report;
  std::vector<std::vector<double>> wait_sum_ms;
  std::vector<std::vector<std::uint64_t>> wait_count;
  std::vector<double> wait_total_ms;
  std::vector<std::uint64_t> wait_total_count;
  TraceSink trace;
  std::uint64_t hash = 0xcbf29ce484222325ULL;

  explicit Impl(SimConfig cfg)
      : config(std::move(cfg)),
        table(config.domain, config.task.priorities),
        arrival_rng(mix64(config.seed)),
        service_rng(mix64(config.seed + 1)),
        workload_rng(mix64(config.seed + 2)) {
    config.validate();
    entry = config.entry_service();
    target = config.service_index(config.task.target);
    out_edges.resize(config.services.size());
    for (const auto& e : config.edges) {
      out_edges[config.service_index(e.from)].push_back(
          {config.service_index(e.to), e.calls, e.per_task});
    }
    std::uint64_t policy_seed = mix64(config.seed + 3);
    for (std::size_t s = 0; s < config.services.size(); ++s) {
      const ServiceSpec& spec = config.services[s];
      first_server.push_back(static_cast<int>(servers.size()));
      for (int r = 0; r < spec.replicas; ++r) {
        Server server;
        server.service = static_cast<int>(s);
        server.replica = r;
        server.workers = spec.workers_per_replica;
        server.policy = make_policy(spec.policy, spec.workers_per_replica, policy_seed = mix64(policy_seed));
        server.round_robin.assign(config.services.size(), 0);
        server.last_level = server.policy->level();
        servers.push_back(std::move(server));
      }
    }
    generator_rr.assign(config.services.size(), 0);

    std::vector<double> weights;
    for (const auto& t : config.task.mix) {
      weights.push_back(t.weight);
      if (std::find(distinct_x.begin(), distinct_x.end(), t.x) == distinct_x.end()) distinct_x.push_back(t.x);
    }
    std::sort(distinct_x.begin(), distinct_x.end());
    for (const auto& t : config.task.mix) {
      type_of_x.push_back(static_cast<int>(std::find(distinct_x.begin(), distinct_x.end(), t.x) - distinct_x.begin()));
    }
    type_pick = std::discrete_distribution<int>(weights.begin(), weights.end());

    measure_start = kTimeZero + config.warmup;
    measure_end = measure_start + config.duration;

    for (int x : distinct_x) report.task_types.push_back({x, 0, 0});
    for (const auto& spec : config.services) {
      ServiceMetrics m;
      m.name = spec.name;
      report.services.push_back(m);
    }
    const auto seconds = static_cast<std::size_t>((config.duration + std::chrono::seconds{1} - Duration{1}) / std::chrono::seconds{1});
    wait_sum_ms.assign(config.services.size(), std::vector<double>(seconds, 0.0));
    wait_count.assign(config.services.size(), std::vector<std::uint64_t>(seconds, 0));
    wait_total_ms.assign(config.services.size(), 0.0);
    wait_total_count.assign(config.services.size(), 0);
  }

  // ---- event plumbing ------------------------------------------------------

  void schedule(Timestamp at, EventKind kind, Handle h = {}, int aux = 0) {
    events.push({at, seq++, kind, h, aux});
  }

  void emit(TraceKind kind, int server, int caller, const RequestEnvelope& env, int attempt,
            std::optional<AdmissionLevel> level = std::nullopt, Outcome outcome = Outcome::kSuccess) {
    if (!trace) return;
    emit_raw(kind, server, caller, env.task_id, env.level(), attempt, level, outcome);
  }

  void emit_raw(TraceKind kind, int server, int caller, std::uint64_t task_id, AdmissionLevel priority,
                int attempt, std::optional<AdmissionLevel> level, Outcome outcome) {
    TraceEvent ev;
    ev.time = now;
    ev.kind = kind;
    ev.server = server;
    ev.caller = caller;
    ev.task_id = task_id;
    ev.attempt = attempt;
    ev.priority = priority;
    ev.level = level;
    ev.outcome = outcome;
    trace(ev);
  }

  void hash_event(const Event& ev) {
    auto feed = [this](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        hash ^= (v >> (8 * i)) & 0xff;
        hash *= 0x100000001b3ULL;
      }
    };
    feed(static_cast<std::uint64_t>(ev.time.time_since_epoch().count()));
    feed(static_cast<std::uint64_t>(ev.kind));
    feed(ev.handle.index);
    feed(static_cast<std::uint64_t>(ev.aux));
  }

  bool in_measurement() const { return now >= measure_start && now < measure_end; }

  Duration sample_service_time(const ServiceSpec& spec) {
    if (spec.service_time.kind == ServiceTimeKind::kDeterministic) return from_ms(spec.service_time.mean_ms);
    std::exponential_distribution<double> dist(1.0 / spec.service_time.mean_ms);
    return std::max(Duration{1}, from_ms(dist(service_rng)));
  }

  void spend(Task& task, int service, Duration d) {
    if (!task.measured) return;
    auto& m = report.services[service];
    m.busy_ms += to_ms(d);
    if (!task.resolved) {
      task.spent_us[service] += d.count();
    } else if (!task.success) {
      m.wasted_service_ms += to_ms(d);
    }
  }

  void accumulate_level(Server& s, Timestamp until) {
    if (!s.last_level) return;
    const Timestamp from = std::max(s.last_level_change, measure_start);
    const Timestamp to = std::min(until, measure_end);
    if (to > from) {
      const double span = to_seconds(to - from);
      s.level_b_integral += s.last_level->b.value * span;
      s.level_u_integral += s.last_level->u.value * span;
    }
    s.last_level_change = until;
  }

  void note_level(int server_id) {
    Server& s = servers[server_id];
    const auto level = s.policy->level();
    if (level == s.last_level) return;
    accumulate_level(s, now);
    s.last_level = level;
    if (level) {
      report.level_trace.push_back({to_ms(now), server_id, *level});
      if (trace) {
        TraceEvent ev;
        ev.time = now;
        ev.kind = TraceKind::kLevelChange;
        ev.server = server_id;
        ev.level = level;
        trace(ev);
      }
    }
  }

  // ---- workload ------------------------------------------------------------

  void schedule_next_task() {
    const double rate = config.task.task_rate();
    if (rate <= 0.0) return;
    Duration gap;
    if (config.task.arrival == ArrivalProcess::kPoisson) {
      std::exponential_distribution<double> dist(rate);
      gap = from_ms(dist(arrival_rng) * 1000.0);
    } else {
      gap = from_ms(1000.0 / rate);
    }
    const Timestamp at = now + std::max(gap, Duration{1});
    if (at >= measure_end) {
      generating = false;
      return;
    }
    schedule(at, EventKind::kTaskArrival);
  }

  void on_task_arrival() {
    Task task;
    task.id = tasks.size();
    const int mix_index = type_pick(workload_rng);
    task.x = config.task.mix[mix_index].x;
    task.type_index = type_of_x[mix_index];
    std::uniform_int_distribution<std::size_t> action_pick(0, config.task.actions.size() - 1);
    task.action = config.task.actions[action_pick(workload_rng)];
    std::uniform_int_distribution<std::uint64_t> user_pick(0, config.task.user_population - 1);
    task.user = "u" + std::to_string(user_pick(workload_rng));
    task.issued = now;
    task.measured = in_measurement();
    task.spent_us.assign(config.services.size(), 0);
    if (task.measured) {
      ++outstanding;
      ++report.issued;
      ++report.task_types[task.type_index].issued;
    }
    tasks.push_back(std::move(task));

    Invocation inv;
    inv.from_generator = true;
    inv.target_service = entry;
    inv.task = tasks.back().id;
    start_attempt(invocations.alloc(inv));
    schedule_next_task();
  }

  void resolve_task(Task& task, bool success) {
    task.resolved = true;
    task.success = success;
    if (!task.measured) return;
    --outstanding;
    if (success) {
      ++report.succeeded;
      ++report.task_types[task.type_index].succeeded;
    } else {
      for (std::size_t s = 0; s < task.spent_us.size(); ++s) {
        report.services[s].wasted_service_ms += static_cast<double>(task.spent_us[s]) / 1000.0;
      }
    }
  }

  // ---- invocations ---------------------------------------------------------

  void start_attempt(Handle inv_handle) {
    Invocation& inv = *invocations.get(inv_handle);
    Task& task = tasks[inv.task];
    ++inv.attempts;
    if (inv.target_service == target) ++task.target_attempts;

    const ServiceSpec& spec = config.services[inv.target_service];
    auto& rr = inv.from_generator ? generator_rr[inv.target_service]
                                  : servers[inv.caller_server].round_robin[inv.target_service];
    const int server_id = first_server[inv.target_service] + static_cast<int>(rr++ % spec.replicas);

    RequestEnvelope env;
    env.task_id = task.id;
    env.action_id = task.action;
    env.user_id = task.user;
    // Downstream requests inherit (b, u) from the request that issues them.
    if (const Record* parent = inv.from_generator ? nullptr : records.get(inv.caller_record)) {
      env.b = parent->env.b;
      env.u = parent->env.u;
    }
    env.hop = {inv.caller_server, server_id};

    if (!inv.from_generator) {
      Server& caller = servers[inv.caller_server];
      if (caller.policy->before_send_downstream(server_id, env) == SendDecision::kShedLocal) {
        if (task.measured) ++report.services[inv.target_service].shed_local_upstream;
        emit(TraceKind::kShedLocal, server_id, inv.caller_server, env, inv.attempts,
             caller.policy->level());
        on_attempt_rejected(inv_handle);
        return;
      }
    }
    emit(TraceKind::kSend, server_id, inv.caller_server, env, inv.attempts);
    Record rec;
    rec.server = server_id;
    rec.invocation = inv_handle;
    rec.attempt = inv.attempts;
    rec.env = std::move(env);
    const Handle rh = records.alloc(std::move(rec));
    schedule(now + config.network_delay, EventKind::kRequestArrival, rh);
    schedule(now + config.timeout, EventKind::kTimeout, inv_handle, inv.attempts);
  }

  void on_attempt_rejected(Handle inv_handle) {
    Invocation& inv = *invocations.get(inv_handle);
    if (inv.attempts <= config.task.max_retries) {
      start_attempt(inv_handle);
    } else {
      resolve_invocation(inv_handle, false);
    }
  }

  void resolve_invocation(Handle inv_handle, bool success) {
    const Invocation inv = *invocations.get(inv_handle);
    invocations.release(inv_handle);
    if (inv.from_generator) {
      resolve_task(tasks[inv.task], success);
      return;
    }
    if (Record* rec = records.get(inv.caller_record)) {
      if (!success) rec->failed = true;
      advance_calls(inv.caller_record);
    }
  }

  // ---- server side ---------------------------------------------------------

  void on_request_arrival(Handle rh) {
    Record& rec = *records.get(rh);
    Server& server = servers[rec.server];
    Task& task = tasks[rec.env.task_id];
    if (rec.env.hop.origin < 0) {
      if (!task.assigned) {
        task.b = assign_business_priority(table, task.action);
        task.u = derive_user_priority(task.user, rotation_epoch(task.issued, config.task.rotation_period));
        task.assigned = true;
      }
      rec.env.b = task.b;
      rec.env.u = task.u;
    }
    rec.env.arrival_time = now;
    auto& m = report.services[server.service];
    if (task.measured) ++m.arrivals;
    emit(TraceKind::kArrive, rec.server, rec.env.hop.origin, rec.env, rec.attempt);

    ArrivalDecision decision = server.policy->on_request_arrival(rec.env, now);
    const auto& capacity = config.services[server.service].queue_capacity;
    if (decision == ArrivalDecision::kEnqueue && capacity && server.queue.size() >= *capacity) {
      decision = ArrivalDecision::kRejectBusy;
    }
    if (decision == ArrivalDecision::kRejectBusy) {
      if (task.measured) ++m.rejected_busy;
      emit(TraceKind::kReject, rec.server, rec.env.hop.origin, rec.env, rec.attempt, server.policy->level());
      reject(rh);
      return;
    }
    if (task.measured) ++m.admitted;
    server.queue.push_back(rh);
    dispatch(rec.server);
  }

  void reject(Handle rh) {
    Record& rec = *records.get(rh);
    rec.outcome = Outcome::kRejectedBusy;
    if (config.services[servers[rec.server].service].reject_cost_ms <= 0.0) {
      send_response(rh);
      return;
    }
    servers[rec.server].reject_queue.push_back(rh);
    dispatch(rec.server);
  }

  void dispatch(int server_id) {
    Server& server = servers[server_id];
    const ServiceSpec& spec = config.services[server.service];
    while (server.busy < server.workers) {
      if (!server.reject_queue.empty()) {
        const Handle rh = server.reject_queue.front();
        server.reject_queue.pop_front();
        ++server.busy;
        const Duration cost = from_ms(spec.reject_cost_ms);
        spend(tasks[records.get(rh)->env.task_id], server.service, cost);
        schedule(now + cost, EventKind::kRejectDone, rh);
        continue;
      }
      if (server.queue.empty()) break;
      const Handle rh = server.queue.front();
      server.queue.pop_front();
      Record& rec = *records.get(rh);
      Task& task = tasks[rec.env.task_id];
      if (server.policy->on_dequeue(rec.env, now, server.queue.size()) == DequeueDecision::kDrop) {
        if (task.measured) ++report.services[server.service].dropped;
        emit(TraceKind::kDrop, server_id, rec.env.hop.origin, rec.env, rec.attempt);
        rec.outcome = Outcome::kRejectedBusy;
        if (spec.reject_cost_ms <= 0.0) {
          send_response(rh);
        } else {
          server.reject_queue.push_back(rh);
        }
        continue;
      }
      ++server.busy;
      rec.env.start_time = now;
      rec.processed = true;
      if (task.measured) ++report.services[server.service].served;
      record_wait(server.service, now - rec.env.arrival_time);
      emit(TraceKind::kStart, server_id, rec.env.hop.origin, rec.env, rec.attempt);
      server.policy->on_processing_start(rec.env, now);
      note_level(server_id);
      rec.service_time = sample_service_time(spec);
      spend(task, server.service, rec.service_time);
      schedule(now + rec.service_time, EventKind::kProcessingDone, rh);
    }
  }

  void record_wait(int service, Duration wait) {
    if (!in_measurement()) return;
    const auto second = static_cast<std::size_t>((now - measure_start) / std::chrono::seconds{1});
    if (second < wait_sum_ms[service].size()) {
      wait_sum_ms[service][second] += to_ms(wait);
      ++wait_count[service][second];
    }
    wait_total_ms[service] += to_ms(wait);
    ++wait_total_count[service];
  }

  void on_reject_done(Handle rh) {
    const int server_id = records.get(rh)->server;
    --servers[server_id].busy;
    send_response(rh);
    dispatch(server_id);
  }

  void on_processing_done(Handle rh) {
    Record& rec = *records.get(rh);
    const int server_id = rec.server;
    Server& server = servers[server_id];
    --server.busy;
    server.policy->on_processing_done(rec.env, rec.service_time, now);
    note_level(server_id);
    dispatch(server_id);
    advance_calls(rh);
  }

  // Issues the next downstream call of a processed request, or finishes it.
  void advance_calls(Handle rh) {
    Record& rec = *records.get(rh);
    Server& server = servers[rec.server];
    const auto& edges = out_edges[server.service];
    const Task& task = tasks[rec.env.task_id];
    while (rec.edge_pos < edges.size()) {
      if (rec.failed && config.task.abort_on_failure) break;
      const OutEdge& edge = edges[rec.edge_pos];
      const int calls = edge.per_task ? task.x : edge.calls;
      if (rec.call_pos < calls) {
        ++rec.call_pos;
        Invocation inv;
        inv.caller_record = rh;
        inv.caller_server = rec.server;
        inv.target_service = edge.to;
        inv.task = task.id;
        start_attempt(invocations.alloc(inv));
        return;
      }
      ++rec.edge_pos;
      rec.call_pos = 0;
    }
    rec.outcome = rec.failed ? Outcome::kFailed : Outcome::kSuccess;
    const ServiceSpec& spec = config.services[server.service];
    if (spec.io_latency_ms > 0.0 || spec.io_contention_ms > 0.0) {
      const double io = spec.io_latency_ms + spec.io_contention_ms * server.in_io;
      ++server.in_io;
      rec.in_io = true;
      schedule(now + from_ms(io), EventKind::kResponseSend, rh);
    } else {
      send_response(rh);
    }
  }

  void send_response(Handle rh) {
    Record& rec = *records.get(rh);
    Server& server = servers[rec.server];
    if (rec.in_io) {
      --server.in_io;
      rec.in_io = false;
    }
    if (rec.processed) {
      server.policy->on_response_sent(rec.env, now);
      note_level(rec.server);
    }
    rec.piggyback = server.policy->level();
    schedule(now + config.network_delay, EventKind::kResponseArrival, rh);
  }

  void on_response_arrival(Handle rh) {
    Record rec = std::move(*records.get(rh));
    records.release(rh);
    Task& task = tasks[rec.env.task_id];
    const int caller = rec.env.hop.origin;
    if (caller >= 0) {
      ResponseEnvelope resp;
      resp.task_id = task.id;
      resp.hop = rec.env.hop;
      resp.outcome = rec.outcome;
      resp.piggyback = rec.piggyback;
      servers[caller].policy->on_response_receive(rec.server, resp);
    }
    emit(TraceKind::kResponse, rec.server, caller, rec.env, rec.attempt, rec.piggyback, rec.outcome);
    Invocation* inv = invocations.get(rec.invocation);
    if (inv == nullptr || inv->attempts != rec.attempt) return;  // late response
    switch (rec.outcome) {
      case Outcome::kSuccess: resolve_invocation(rec.invocation, true); break;
      case Outcome::kRejectedBusy: on_attempt_rejected(rec.invocation); break;
      case Outcome::kFailed:
      case Outcome::kTimeout: resolve_invocation(rec.invocation, false); break;
    }
  }

  void on_timeout(Handle inv_handle, int attempt) {
    Invocation* inv = invocations.get(inv_handle);
    if (inv == nullptr || inv->attempts != attempt) return;
    Task& task = tasks[inv->task];
    if (task.measured) ++report.services[inv->target_service].timeouts;
    if (trace) {
      emit_raw(TraceKind::kTimeout, -1, inv->caller_server, task.id, {task.b, task.u}, attempt,
               std::nullopt, Outcome::kTimeout);
    }
    resolve_invocation(inv_handle, false);
  }

  void on_window_poll(int server_id) {
    Server& server = servers[server_id];
    server.policy->on_poll(now);
    note_level(server_id);
    const Timestamp next = std::max(server.policy->next_poll(now), now + Duration{1});
    schedule(next, EventKind::kWindowPoll, {}, server_id);
  }

  // ---- driver ----------------------------------------------------------------

  MetricsReport run() {
    for (std::size_t i = 0; i < servers.size(); ++i) {
      schedule(std::max(servers[i].policy->next_poll(now), now + Duration{1}), EventKind::kWindowPoll, {},
               static_cast<int>(i));
    }
    schedule_next_task();
    // Every measured task resolves within one timeout of the end of
    // generation; the cap is a guard against livelock.
    const Timestamp hard_stop = measure_end + config.timeout * (2 + config.task.max_retries) * 8;
    while (!events.empty()) {
      if (!generating && outstanding == 0) break;
      const Event ev = events.top();
      if (ev.time > hard_stop) break;
      events.pop();
      now = ev.time;
      hash_event(ev);
      ++report.events;
      switch (ev.kind) {
        case EventKind::kTaskArrival: on_task_arrival(); break;
        case EventKind::kRequestArrival: on_request_arrival(ev.handle); break;
        case EventKind::kProcessingDone: on_processing_done(ev.handle); break;
        case EventKind::kRejectDone: on_reject_done(ev.handle); break;
        case EventKind::kResponseSend: send_response(ev.handle); break;
        case EventKind::kResponseArrival: on_response_arrival(ev.handle); break;
        case EventKind::kTimeout: on_timeout(ev.handle, ev.aux); break;
        case EventKind::kWindowPoll: on_window_poll(ev.aux); break;
      }
    }
    finish();
    return std::move(report);
  }

  void finish() {
    report.trace_hash = hash;
    std::vector<double> level_seconds(config.services.size(), 0.0);
    std::vector<double> b_sum(config.services.size(), 0.0);
    std::vector<double> u_sum(config.services.size(), 0.0);
    std::vector<bool> has_level(config.services.size(), false);
    const double span = to_seconds(measure_end - measure_start);
    for (auto& server : servers) {
      accumulate_level(server, std::max(now, measure_end));
      if (!server.last_level) continue;
      has_level[server.service] = true;
      b_sum[server.service] += server.level_b_integral / span;
      u_sum[server.service] += server.level_u_integral / span;
      level_seconds[server.service] += 1.0;
    }
    for (std::size_t s = 0; s < config.services.size(); ++s) {
      auto& m = report.services[s];
      if (has_level[s]) {
        m.avg_level_b = b_sum[s] / level_seconds[s];
        m.avg_level_u = u_sum[s] / level_seconds[s];
      }
      if (wait_total_count[s] > 0) m.avg_queuing_ms = wait_total_ms[s] / static_cast<double>(wait_total_count[s]);
      m.queuing_ms_per_second.resize(wait_sum_ms[s].size());
      for (std::size_t i = 0; i < wait_sum_ms[s].size(); ++i) {
        m.queuing_ms_per_second[i] = wait_count[s][i] ? wait_sum_ms[s][i] / static_cast<double>(wait_count[s][i]) : 0.0;
      }
    }
  }
};

Sim::Sim(SimConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Sim::~Sim() = default;
Sim::Sim(Sim&&) noexcept = default;
Sim& Sim::operator=(Sim&&) noexcept = default;

void Sim::set_trace(TraceSink sink) { impl_->trace = std::move(sink); }
MetricsReport Sim::run() { return impl_->run(); }
const SimConfig& Sim::config() const { return impl_->config; }
std::size_t Sim::server_count() const { return impl_->servers.size(); }
ServerInfo Sim::server_info(int server) const {
  const auto& s = impl_->servers.at(static_cast<std::size_t>(server));
  return {s.service, s.replica};
}

const ServiceMetrics& MetricsReport::service(std::string_view name) const {
  for (const auto& s : services) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no service named " + std::string{name});
}

const TaskTypeMetrics* MetricsReport::task_type(int x) const {
  for (const auto& t : task_types) {
    if (t.x == x) return &t;
  }
  return nullptr;
}

Sim build_scenario(SimConfig config) { return Sim{std::move(config)}; }

MetricsReport run(Sim& sim) { return sim.run(); }

double optimal_success(double f_sat, double f) {
  if (!(f > 0.0)) throw std::invalid_argument("feed rate must be > 0");
  return std::min(1.0, f_sat / f);
}

}  // namespace dagor
