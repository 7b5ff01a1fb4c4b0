#include "gridstream/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <latch>
#include <numeric>
#include <random>

#include "gridstream/errors.hpp"

namespace gridstream {

namespace {

constexpr int kPriorityInject = 0;
constexpr int kPriorityComplete = 1;
constexpr int kPriorityTick = 2;

bool driver_local(const PlanNode& node) {
  if (node.op() == PlanOp::kCombine) return true;
  if (node.op() == PlanOp::kSource) return false;
  return std::all_of(node.parents().begin(), node.parents().end(),
                     [](const PlanNodePtr& p) { return driver_local(*p); });
}

void collect_combines(const PlanNodePtr& node, std::vector<PlanNodePtr>& out,
                      std::set<Sha256>& seen) {
  for (const auto& p : node->parents()) collect_combines(p, out, seen);
  if (node->op() == PlanOp::kCombine && seen.insert(node->id()).second) out.push_back(node);
}

std::string task_ids(JobId job, std::uint32_t stage, std::size_t partition, std::uint32_t attempt) {
  return "j" + std::to_string(job) + " s" + std::to_string(stage) + " p" +
         std::to_string(partition) + " a" + std::to_string(attempt);
}

std::size_t outcome_bytes(const Payload& payload, const std::optional<Element>& partial) {
  std::size_t n = 0;
  for (const auto& e : payload) n += byte_size(e);
  if (partial) n += byte_size(*partial);
  return n;
}

}  // namespace

std::string format_seconds(Micros t) {
  std::string sign = t < 0 ? "-" : "";
  const std::uint64_t a = t < 0 ? static_cast<std::uint64_t>(-t) : static_cast<std::uint64_t>(t);
  std::string frac = std::to_string(a % 1'000'000);
  frac.insert(0, 6 - frac.size(), '0');
  return sign + std::to_string(a / 1'000'000) + "." + frac;
}

Micros TaskCostModel::cost(const EvalStats& stats) const {
  return per_task + per_invocation * static_cast<Micros>(stats.invocations) +
         std::llround(per_byte * static_cast<double>(stats.bytes_read));
}

void ClusterConfig::validate() const {
  if (nodes == 0) throw ConfigError("cluster needs at least one node");
  if (workers_per_node == 0) throw ConfigError("workers per node must be at least 1");
  if (cores_per_worker == 0) throw ConfigError("cores per worker must be at least 1");
  if (heartbeat_interval <= 0) throw ConfigError("heartbeat interval must be positive");
  if (failure_timeout < 2 * heartbeat_interval) {
    throw ConfigError("failure timeout must be at least twice the heartbeat interval");
  }
  if (max_attempts == 0) throw ConfigError("max attempts must be at least 1");
  if (cost.per_task < 0 || cost.per_invocation < 0 || cost.per_byte < 0) {
    throw ConfigError("task costs must be non-negative");
  }
}

Cluster::Cluster(ClusterConfig config, BlockStore& store) : config_(config), store_(store) {
  config_.validate();
  if (store_.nodes().size() != config_.nodes) {
    throw ConfigError("cluster has " + std::to_string(config_.nodes) +
                      " nodes but the block store has " + std::to_string(store_.nodes().size()));
  }
}

Cluster::~Cluster() { stop(); }

void Cluster::start() {
  if (started_) return;
  slots_.clear();
  const std::uint32_t per_node = config_.workers_per_node * config_.cores_per_worker;
  for (std::uint32_t i = 0; i < config_.slots(); ++i) {
    slots_.push_back(Slot{NodeId{i / per_node}, i, std::nullopt, false});
  }
  slot_order_.resize(slots_.size());
  std::iota(slot_order_.begin(), slot_order_.end(), 0u);
  std::mt19937_64 rng(config_.seed);
  std::shuffle(slot_order_.begin(), slot_order_.end(), rng);

  nodes_.assign(config_.nodes, NodeState{now_, false, std::nullopt});
  caches_.assign(config_.nodes, {});
  cache_bytes_.assign(config_.nodes, 0);

  workers_.clear();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    workers_.push_back(std::make_unique<SlotWorker>());
    SlotWorker& w = *workers_.back();
    w.thread = std::thread([this, &w] { slot_main(w); });
  }
  started_ = true;
  Event tick;
  tick.time = now_;
  tick.priority = kPriorityTick;
  tick.kind = Event::Kind::kTick;
  push(std::move(tick));
  log("start", "nodes=" + std::to_string(config_.nodes) + " slots=" + std::to_string(slots_.size()));
}

void Cluster::stop() {
  for (auto& w : workers_) {
    {
      std::lock_guard lock(w->mu);
      w->quit = true;
    }
    w->cv.notify_one();
  }
  for (auto& w : workers_) {
    if (w->thread.joinable()) w->thread.join();
  }
  workers_.clear();
  started_ = false;
}

void Cluster::slot_main(SlotWorker& w) {
  for (;;) {
    std::function<void()> work;
    {
      std::unique_lock lock(w.mu);
      w.cv.wait(lock, [&] { return w.quit || !w.inbox.empty(); });
      if (w.inbox.empty()) return;
      work = std::move(w.inbox.front());
      w.inbox.pop_front();
    }
    work();
  }
}

void Cluster::log(const std::string& kind, const std::string& ids) {
  trace_.push_back(format_seconds(now_) + " " + kind + (ids.empty() ? "" : " " + ids));
}

void Cluster::write_trace(const std::filesystem::path& path) const {
  std::string text;
  for (const auto& line : trace_) text += line + "\n";
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

void Cluster::push(Event e) {
  e.seq = seq_++;
  events_.push(std::move(e));
}

Cluster::Job& Cluster::job_ref(JobId id) {
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw UnknownJobError("unknown job " + std::to_string(id));
  return it->second;
}

const Cluster::Job& Cluster::job_ref(JobId id) const {
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw UnknownJobError("unknown job " + std::to_string(id));
  return it->second;
}

JobId Cluster::submit(PlanNodePtr root, std::optional<std::vector<std::size_t>> partitions) {
  if (!started_) throw NotStartedError("cluster not started");
  Job job;
  job.id = next_job_++;
  job.root = root;
  job.metrics.submitted_at = now_;
  job.driver_root = driver_local(*root);

  std::vector<std::size_t> wanted;
  if (partitions) {
    wanted = *partitions;
    for (std::size_t p : wanted) {
      if (p >= root->partitions()) {
        throw TypeError("partition " + std::to_string(p) + " out of range for the plan root");
      }
    }
  } else {
    wanted.resize(root->partitions());
    std::iota(wanted.begin(), wanted.end(), std::size_t{0});
  }

  if (!wanted.empty()) {
    std::vector<PlanNodePtr> combines;
    std::set<Sha256> seen;
    collect_combines(root, combines, seen);
    for (const auto& c : combines) {
      Stage s;
      s.target = c->parents().front();
      s.fold = &OperatorRegistry::global().combine(c->operator_ref().name);
      s.combine = c;
      s.partitions.resize(s.target->partitions());
      std::iota(s.partitions.begin(), s.partitions.end(), std::size_t{0});
      job.stages.push_back(std::move(s));
    }
    if (!job.driver_root) {
      Stage s;
      s.target = root;
      s.partitions = wanted;
      job.stages.push_back(std::move(s));
    }
  }
  // Partitions evaluated on the coordinator once every stage is done.
  for (std::size_t p : wanted) job.outputs[p];

  const JobId id = job.id;
  auto& stored = jobs_.emplace(id, std::move(job)).first->second;
  log("submit", "j" + std::to_string(id) + " plan=" + root->short_id() +
                    " stages=" + std::to_string(stored.stages.size()));
  if (wanted.empty()) {
    stored.outputs.clear();
    stored.metrics.finished = true;
    stored.metrics.finished_at = now_;
    log("job-done", "j" + std::to_string(id));
    return id;
  }
  if (processor_slots() == 0) {
    fail_job(stored, 0, "no live processor slots remain");
    return id;
  }
  enqueue_stage(stored);
  schedule_pass();
  return id;
}

void Cluster::enqueue_stage(Job& job) {
  while (job.stage < job.stages.size()) {
    const Stage& s = job.stages[job.stage];
    if (s.combine) {
      job.combine_inputs[s.combine->id()] =
          std::make_shared<CombineInputs>(s.target->partitions());
    }
    for (std::size_t p : s.partitions) {
      queue_[TaskKey{job.id, job.stage, p}] = 1;
      ++job.metrics.tasks_total;
    }
    job.remaining = s.partitions.size();
    if (job.remaining > 0) return;
    ++job.stage;
  }
  finish_stage(job);
}

void Cluster::finish_stage(Job& job) {
  if (job.stage < job.stages.size()) {
    ++job.stage;
    if (job.stage < job.stages.size()) {
      enqueue_stage(job);
      return;
    }
  }
  if (job.metrics.finished) return;
  if (job.driver_root) {
    try {
      EvalContext ctx;
      ctx.store = &store_;
      ctx.combine_inputs = [&job](const PlanNode& c) -> const CombineInputs& {
        return *job.combine_inputs.at(c.id());
      };
      for (auto& [p, payload] : job.outputs) payload = evaluate_partition(*job.root, p, ctx);
      job.metrics.operator_invocations += ctx.stats.invocations;
    } catch (const Error& e) {
      fail_job(job, static_cast<std::uint32_t>(job.stages.size()), e.what());
      return;
    }
  }
  job.metrics.finished = true;
  job.metrics.finished_at = now_;
  log("job-done", "j" + std::to_string(job.id));
}

void Cluster::fail_job(Job& job, std::uint32_t stage, const std::string& what) {
  if (job.metrics.finished) return;
  job.error = std::make_exception_ptr(JobFailedError(job.id, stage, what));
  job.metrics.finished = true;
  job.metrics.failed = true;
  job.metrics.finished_at = now_;
  for (auto it = queue_.begin(); it != queue_.end();) {
    it = it->first.job == job.id ? queue_.erase(it) : std::next(it);
  }
  log("job-failed", "j" + std::to_string(job.id) + " s" + std::to_string(stage));
}

JobResult Cluster::await(JobId id) {
  job_ref(id);
  if (!started_) throw NotStartedError("cluster not started");
  while (!job_ref(id).metrics.finished) step();
  Job& job = job_ref(id);
  if (job.error) std::rethrow_exception(job.error);
  JobResult result;
  for (auto& [p, payload] : job.outputs) result.partitions.emplace_back(p, payload);
  return result;
}

BatchMetrics Cluster::metrics(JobId id) const { return job_ref(id).metrics; }

void Cluster::advance_to(Micros t) {
  if (!started_) throw NotStartedError("cluster not started");
  while (!events_.empty() && events_.top().time <= t) step();
  now_ = std::max(now_, t);
}

void Cluster::step() {
  if (events_.empty()) return;
  const Micros t = events_.top().time;
  now_ = std::max(now_, t);
  while (!events_.empty() && events_.top().time <= t) {
    Event e = events_.top();
    events_.pop();
    switch (e.kind) {
      case Event::Kind::kInject:
        fire_injection(e.node, e.failure);
        break;
      case Event::Kind::kComplete:
        on_complete(e);
        break;
      case Event::Kind::kTick:
        on_tick();
        break;
    }
  }
  schedule_pass();
}

void Cluster::schedule_pass() {
  if (receiver_wanted_) place_receiver();
  std::vector<std::uint32_t> free;
  for (std::uint32_t idx : slot_order_) {
    const Slot& s = slots_[idx];
    if (!s.busy && !s.receiver && !nodes_[s.node.value].dead) free.push_back(idx);
  }
  std::vector<std::pair<std::uint32_t, Assignment>> started;
  for (std::size_t i = 0; i < free.size() && !queue_.empty(); ++i) {
    Slot& slot = slots_[free[i]];
    const std::size_t window = free.size() - i;
    auto head = queue_.begin();
    auto chosen = head;
    std::size_t seen = 0;
    for (auto it = head; it != queue_.end() && seen < window && it->first.job == head->first.job;
         ++it, ++seen) {
      const Job& job = jobs_.at(it->first.job);
      const Stage& stage = job.stages[it->first.stage];
      bool local = false;
      try {
        for (const auto& b : partition_sources(*stage.target, it->first.partition)) {
          if (store_.replicas(b).contains(slot.node)) {
            local = true;
            break;
          }
        }
      } catch (const Error&) {
      }
      if (local) {
        chosen = it;
        break;
      }
    }
    const Assignment a{chosen->first, chosen->second};
    queue_.erase(chosen);
    slot.busy = a;
    Job& job = jobs_.at(a.key.job);
    if (!job.started) {
      job.started = true;
      job.metrics.scheduling_delay = now_ - job.metrics.submitted_at;
    }
    log("start", task_ids(a.key.job, a.key.stage, a.key.partition, a.attempt) + " " +
                     to_string(slot.node) + " slot" + std::to_string(slot.index));
    started.emplace_back(free[i], a);
  }
  if (!started.empty()) dispatch(started);
}

Cluster::Outcome Cluster::execute(const Job& job, const TaskKey& key, NodeId node) const {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Stage& stage = job.stages[key.stage];
    EvalContext ctx;
    ctx.store = &store_;
    ctx.node = node;
    ctx.combine_inputs = [&job](const PlanNode& c) -> const CombineInputs& {
      const auto it = job.combine_inputs.find(c.id());
      if (it == job.combine_inputs.end()) throw TypeError("combine inputs not computed yet");
      return *it->second;
    };
    Payload payload = evaluate_partition(*stage.target, key.partition, ctx);
    if (stage.fold) {
      out.partial = fold_partition(*stage.fold, payload, ctx.stats);
    } else {
      out.payload = std::move(payload);
    }
    out.stats = ctx.stats;
  } catch (...) {
    out.error = std::current_exception();
  }
  out.measured = std::chrono::duration_cast<std::chrono::microseconds>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return out;
}

void Cluster::dispatch(std::vector<std::pair<std::uint32_t, Assignment>>& started) {
  struct Pending {
    std::uint32_t slot;
    Assignment assignment;
    std::shared_ptr<const Outcome> outcome;
    std::shared_ptr<Outcome> fresh;
  };
  std::vector<Pending> pending;
  std::vector<Pending*> to_run;
  pending.reserve(started.size());
  for (auto& [slot_idx, a] : started) {
    const Slot& slot = slots_[slot_idx];
    // A crashed node accepts work but never reports back.
    if (nodes_[slot.node.value].failed == FailureKind::kCrash) continue;
    const Job& job = jobs_.at(a.key.job);
    const Stage& stage = job.stages[a.key.stage];
    const Sha256& key = stage.combine ? stage.combine->id() : stage.target->id();
    Pending p{slot_idx, a, cache_lookup(slot.node, key, a.key.partition), nullptr};
    pending.push_back(std::move(p));
  }
  for (auto& p : pending) {
    if (!p.outcome) {
      p.fresh = std::make_shared<Outcome>();
      to_run.push_back(&p);
    }
  }

  std::latch done(static_cast<std::ptrdiff_t>(to_run.size()));
  for (Pending* p : to_run) {
    SlotWorker& w = *workers_[p->slot];
    const Job& job = jobs_.at(p->assignment.key.job);
    const TaskKey key = p->assignment.key;
    const NodeId node = slots_[p->slot].node;
    auto target = p->fresh;
    {
      std::lock_guard lock(w.mu);
      w.inbox.push_back([this, &job, key, node, target, &done] {
        *target = execute(job, key, node);
        done.count_down();
      });
    }
    w.cv.notify_one();
  }
  done.wait();

  for (auto& p : pending) {
    Event e;
    e.kind = Event::Kind::kComplete;
    e.priority = kPriorityComplete;
    e.slot = p.slot;
    e.assignment = p.assignment;
    Micros cost;
    if (p.fresh) {
      cost = config_.clock == ClockMode::kVirtual ? config_.cost.cost(p.fresh->stats)
                                                  : p.fresh->measured;
      e.outcome = p.fresh;
    } else {
      auto hit = std::make_shared<Outcome>(*p.outcome);
      hit->from_cache = true;
      hit->stats = {};
      cost = config_.clock == ClockMode::kVirtual ? config_.cost.per_task : 0;
      e.outcome = std::move(hit);
    }
    e.time = now_ + cost;
    push(std::move(e));
  }
}

void Cluster::on_complete(const Event& e) {
  Slot& slot = slots_[e.slot];
  const Assignment& a = e.assignment;
  const std::string ids = task_ids(a.key.job, a.key.stage, a.key.partition, a.attempt) + " " +
                          to_string(slot.node);
  if (nodes_[slot.node.value].failed == FailureKind::kCrash) return;
  if (!slot.busy || slot.busy->key != a.key || slot.busy->attempt != a.attempt) {
    log("discard", ids);
    return;
  }
  slot.busy.reset();
  ++completions_;

  Job& job = jobs_.at(a.key.job);
  if (job.metrics.finished) {
    log("discard", ids);
  } else if (e.outcome->error) {
    bool retry = false;
    std::string what;
    try {
      std::rethrow_exception(e.outcome->error);
    } catch (const BlockUnavailableError& ex) {
      retry = true;
      what = ex.what();
    } catch (const IntegrityError& ex) {
      retry = true;
      what = ex.what();
    } catch (const std::exception& ex) {
      what = ex.what();
    }
    log("task-error", ids);
    if (retry) {
      requeue(a);
    } else {
      fail_job(job, a.key.stage, what);
    }
  } else {
    const Outcome& o = *e.outcome;
    job.metrics.operator_invocations += o.stats.invocations;
    job.metrics.bytes_read += o.stats.bytes_read;
    job.metrics.elements_dropped += o.stats.elements_dropped;
    job.metrics.processing_time = now_ - (job.metrics.submitted_at + job.metrics.scheduling_delay);
    const Stage& stage = job.stages[a.key.stage];
    if (stage.combine) {
      (*job.combine_inputs.at(stage.combine->id()))[a.key.partition] = o.partial;
    } else {
      job.outputs[a.key.partition] = o.payload;
    }
    if (!o.from_cache) {
      const Sha256& key = stage.combine ? stage.combine->id() : stage.target->id();
      cache_insert(slot.node, key, a.key.partition, e.outcome);
    }
    log("finish", ids);
    if (--job.remaining == 0) finish_stage(job);
  }

  for (auto it = pending_injections_.begin(); it != pending_injections_.end();) {
    if (it->at_completion <= completions_) {
      const PendingInjection inj = *it;
      it = pending_injections_.erase(it);
      fire_injection(inj.node, inj.kind);
    } else {
      ++it;
    }
  }
}

void Cluster::requeue(const Assignment& a) {
  Job& job = jobs_.at(a.key.job);
  if (job.metrics.finished) return;
  ++job.metrics.tasks_rescheduled;
  if (a.attempt >= config_.max_attempts) {
    fail_job(job, a.key.stage,
             "task p" + std::to_string(a.key.partition) + " failed after " +
                 std::to_string(a.attempt) + " attempts");
    return;
  }
  queue_[a.key] = a.attempt + 1;
  log("requeue", task_ids(a.key.job, a.key.stage, a.key.partition, a.attempt + 1));
}

void Cluster::on_tick() {
  for (auto& n : nodes_) {
    if (!n.dead && !n.failed) n.last_heartbeat = now_;
  }
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].dead && now_ - nodes_[i].last_heartbeat > config_.failure_timeout) {
      declare_dead(NodeId{i});
    }
  }
  Event tick;
  tick.time = now_ + config_.heartbeat_interval;
  tick.priority = kPriorityTick;
  tick.kind = Event::Kind::kTick;
  push(std::move(tick));
}

void Cluster::inject_failure(NodeId node, FailureTrigger trigger, FailureKind kind) {
  if (node.value >= config_.nodes) throw UnknownNodeError("unknown node " + to_string(node));
  if (trigger.at) {
    Event e;
    e.kind = Event::Kind::kInject;
    e.priority = kPriorityInject;
    e.time = std::max(*trigger.at, now_);
    e.node = node;
    e.failure = kind;
    push(std::move(e));
  } else {
    pending_injections_.push_back({node, kind, completions_ + trigger.after_tasks.value_or(0)});
  }
}

void Cluster::fire_injection(NodeId node, FailureKind kind) {
  NodeState& n = nodes_[node.value];
  if (n.dead || n.failed) return;
  n.failed = kind;
  log("inject", to_string(node) + (kind == FailureKind::kCrash ? " crash" : " silence"));
  if (kind == FailureKind::kCrash) store_.mark_unreachable(node);
}

void Cluster::declare_dead(NodeId node) {
  NodeState& n = nodes_[node.value];
  std::size_t active = 0;
  for (const auto& s : slots_) {
    if (s.node == node && s.busy) ++active;
  }
  n.dead = true;
  log("dead", to_string(node) + " active=" + std::to_string(active));
  const auto under = store_.drop_node(node);
  const auto created = store_.re_replicate();
  log("rereplicate", to_string(node) + " under=" + std::to_string(under.size()) +
                         " created=" + std::to_string(created));
  caches_[node.value].clear();
  cache_bytes_[node.value] = 0;
  for (auto& s : slots_) {
    if (s.node != node) continue;
    if (s.busy) {
      const Assignment a = *s.busy;
      s.busy.reset();
      requeue(a);
    }
    if (s.receiver) {
      s.receiver = false;
      receiver_wanted_ = true;
    }
  }
  if (receiver_wanted_) place_receiver();
  check_feasible();
}

void Cluster::check_feasible() {
  if (processor_slots() > 0) return;
  for (auto& [id, job] : jobs_) {
    if (!job.metrics.finished) {
      fail_job(job, job.stage, "no live processor slots remain");
    }
  }
}

void Cluster::place_receiver() {
  for (const auto& s : slots_) {
    if (s.receiver && !nodes_[s.node.value].dead) {
      receiver_wanted_ = false;
      return;
    }
  }
  for (std::uint32_t idx : slot_order_) {
    Slot& s = slots_[idx];
    if (s.busy || nodes_[s.node.value].dead) continue;
    s.receiver = true;
    receiver_wanted_ = false;
    log("receiver", to_string(s.node) + " slot" + std::to_string(s.index));
    return;
  }
}

void Cluster::reserve_receiver() {
  if (!started_) throw NotStartedError("cluster not started");
  if (slots_.size() < 2) {
    throw InsufficientResourcesError(
        "streaming needs at least 2 worker slots (one receiver, one processor); cluster has " +
        std::to_string(slots_.size()) + ". Add workers or nodes.");
  }
  receiver_wanted_ = true;
  place_receiver();
}

std::optional<NodeId> Cluster::receiver_node() const {
  for (const auto& s : slots_) {
    if (s.receiver) return s.node;
  }
  return std::nullopt;
}

std::uint32_t Cluster::processor_slots() const {
  std::uint32_t n = 0;
  for (const auto& s : slots_) {
    if (!s.receiver && !nodes_[s.node.value].dead) ++n;
  }
  // A receiver waiting for a free slot will take one of them.
  if (receiver_wanted_ && n > 0) --n;
  return n;
}

bool Cluster::is_dead(NodeId node) const {
  if (node.value >= nodes_.size()) throw UnknownNodeError("unknown node " + to_string(node));
  return nodes_[node.value].dead;
}

std::vector<NodeId> Cluster::dead_nodes() const {
  std::vector<NodeId> out;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].dead) out.push_back(NodeId{i});
  }
  return out;
}

std::shared_ptr<const Cluster::Outcome> Cluster::cache_lookup(NodeId node, const Sha256& key,
                                                              std::size_t partition) {
  if (config_.cache_budget_bytes == 0) return nullptr;
  auto& lru = caches_[node.value];
  for (auto it = lru.begin(); it != lru.end(); ++it) {
    if (it->node == key && it->partition == partition) {
      lru.splice(lru.begin(), lru, it);
      return lru.front().outcome;
    }
  }
  return nullptr;
}

void Cluster::cache_insert(NodeId node, const Sha256& key, std::size_t partition,
                           std::shared_ptr<const Outcome> outcome) {
  if (config_.cache_budget_bytes == 0) return;
  const std::size_t bytes = outcome_bytes(outcome->payload, outcome->partial);
  if (bytes > config_.cache_budget_bytes) return;
  auto& lru = caches_[node.value];
  std::erase_if(lru, [&](const CacheEntry& c) {
    if (c.node == key && c.partition == partition) {
      cache_bytes_[node.value] -= c.bytes;
      return true;
    }
    return false;
  });
  while (cache_bytes_[node.value] + bytes > config_.cache_budget_bytes && !lru.empty()) {
    cache_bytes_[node.value] -= lru.back().bytes;
    lru.pop_back();
  }
  lru.push_front(CacheEntry{key, partition, std::move(outcome), bytes});
  cache_bytes_[node.value] += bytes;
}

bool Cluster::cached(NodeId node, const Sha256& plan_node, std::size_t partition) const {
  if (node.value >= caches_.size()) return false;
  for (const auto& c : caches_[node.value]) {
    if (c.node == plan_node && c.partition == partition) return true;
  }
  return false;
}

void Cluster::drop_caches() {
  for (auto& c : caches_) c.clear();
  std::fill(cache_bytes_.begin(), cache_bytes_.end(), 0);
}

}  // namespace gridstream
