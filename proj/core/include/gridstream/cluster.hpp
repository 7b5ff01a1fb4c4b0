#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "gridstream/blockstore.hpp"
#include "gridstream/plan.hpp"

namespace gridstream {

// Simulated time in microseconds since cluster start.
using Micros = std::int64_t;

constexpr Micros seconds(double s) { return static_cast<Micros>(s * 1e6 + (s >= 0 ? 0.5 : -0.5)); }
std::string format_seconds(Micros t);  // "12.345678"

enum class ClockMode {
  kVirtual,  // task durations come from the cost model; fully deterministic
  kReal,     // task durations are measured wall-clock compute times
};

// Virtual duration of one task attempt.
struct TaskCostModel {
  Micros per_task = 250'000;
  Micros per_invocation = 10'000;
  double per_byte = 0.01;  // microseconds per source byte read

  Micros cost(const EvalStats& stats) const;
};

struct ClusterConfig {
  std::uint32_t nodes = 2;
  std::uint32_t workers_per_node = 2;
  std::uint32_t cores_per_worker = 1;
  Micros heartbeat_interval = 1'000'000;
  Micros failure_timeout = 3'000'000;
  ClockMode clock = ClockMode::kVirtual;
  std::uint64_t seed = 0;
  TaskCostModel cost;
  std::uint32_t max_attempts = 4;
  // Per-node budget for retained partition results; 0 disables caching.
  std::size_t cache_budget_bytes = 256u << 20;

  std::uint32_t slots() const noexcept { return nodes * workers_per_node * cores_per_worker; }
  // Throws ConfigError.
  void validate() const;
};

struct BatchMetrics {
  Micros submitted_at = 0;
  Micros finished_at = 0;
  Micros scheduling_delay = 0;  // submit to first task start
  Micros processing_time = 0;   // first task start to last task end
  std::uint64_t tasks_total = 0;
  std::uint64_t tasks_rescheduled = 0;
  std::uint64_t operator_invocations = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t elements_dropped = 0;
  bool finished = false;
  bool failed = false;
};

enum class FailureKind {
  kCrash,    // stops executing and heartbeating; replicas become unreachable
  kSilence,  // stops heartbeating but keeps executing
};

struct FailureTrigger {
  std::optional<Micros> at;                    // absolute simulated time
  std::optional<std::uint64_t> after_tasks;    // after k further task completions
  static FailureTrigger at_time(Micros t) { return {t, std::nullopt}; }
  static FailureTrigger after_completions(std::uint64_t k) { return {std::nullopt, k}; }
};

using JobId = std::uint64_t;

// Output of one job: one payload per requested root partition, tagged with
// the partition index.
struct JobResult {
  std::vector<std::pair<std::size_t, Payload>> partitions;
};

// Discrete-event cluster simulator. A single coordinator owns the task
// queue, heartbeats and job state; every execution slot has its own thread
// that receives tasks and returns results by message. Events at the same
// simulated instant are ordered by (priority, sequence), so a fixed seed in
// virtual mode reproduces the trace exactly.
//
// Jobs are split into one stage per COMBINE node (tasks evaluate and fold
// one parent partition) followed, unless the root only depends on combined
// data, by a stage evaluating each root partition. Root nodes downstream of
// COMBINE are finished on the coordinator.
class Cluster {
 public:
  Cluster(ClusterConfig config, BlockStore& store);
  ~Cluster();

  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  void start();
  void stop();
  bool started() const noexcept { return started_; }

  const ClusterConfig& config() const noexcept { return config_; }
  BlockStore& store() noexcept { return store_; }
  Micros now() const noexcept { return now_; }

  // Throws NotStartedError. An empty `partitions` list completes at once.
  JobId submit(PlanNodePtr root,
               std::optional<std::vector<std::size_t>> partitions = std::nullopt);
  // Drives the simulation until the job ends. Throws JobFailedError or
  // UnknownJobError.
  JobResult await(JobId job);
  JobResult run(PlanNodePtr root) { return await(submit(std::move(root))); }
  BatchMetrics metrics(JobId job) const;

  // Processes every event up to and including `t`, then sets now to `t`.
  void advance_to(Micros t);

  // Throws UnknownNodeError; a node already failed is ignored.
  void inject_failure(NodeId node, FailureTrigger trigger, FailureKind kind = FailureKind::kCrash);
  bool is_dead(NodeId node) const;
  std::vector<NodeId> dead_nodes() const;

  // Dedicates one slot to receiving; it moves to another node if its node
  // dies. Throws InsufficientResourcesError with fewer than 2 slots.
  void reserve_receiver();
  std::optional<NodeId> receiver_node() const;
  std::uint32_t processor_slots() const;

  // Event trace, one "<seconds> <kind> <ids...>" line per event.
  const std::vector<std::string>& trace() const noexcept { return trace_; }
  void log(const std::string& kind, const std::string& ids);
  void write_trace(const std::filesystem::path& path) const;

  // Retained results; keyed by plan node and partition.
  bool cached(NodeId node, const Sha256& plan_node, std::size_t partition) const;
  void drop_caches();

 private:
  struct TaskKey {
    JobId job = 0;
    std::uint32_t stage = 0;
    std::size_t partition = 0;
    auto operator<=>(const TaskKey&) const = default;
  };

  struct Stage {
    PlanNodePtr target;            // node evaluated per partition
    const CombineOperator* fold = nullptr;  // set for combine stages
    PlanNodePtr combine;           // the COMBINE node fed by this stage
    std::vector<std::size_t> partitions;
  };

  struct Job {
    JobId id = 0;
    PlanNodePtr root;
    std::vector<Stage> stages;
    bool driver_root = false;
    std::uint32_t stage = 0;
    std::size_t remaining = 0;
    std::map<Sha256, std::shared_ptr<CombineInputs>> combine_inputs;
    std::map<std::size_t, Payload> outputs;
    std::map<std::size_t, std::uint32_t> attempts;
    BatchMetrics metrics;
    bool started = false;
    std::exception_ptr error;
  };

  struct Assignment {
    TaskKey key;
    std::uint32_t attempt = 0;
  };

  struct Slot {
    NodeId node;
    std::uint32_t index = 0;
    std::optional<Assignment> busy;
    bool receiver = false;
  };

  struct NodeState {
    Micros last_heartbeat = 0;
    bool dead = false;
    std::optional<FailureKind> failed;  // injected, possibly undetected
  };

  struct Outcome {
    Payload payload;
    std::optional<Element> partial;
    EvalStats stats;
    bool from_cache = false;
    std::exception_ptr error;
    Micros measured = 0;
  };

  struct Event {
    enum class Kind { kInject, kComplete, kTick };
    Micros time = 0;
    int priority = 0;
    std::uint64_t seq = 0;
    Kind kind = Kind::kTick;
    std::uint32_t slot = 0;
    Assignment assignment;
    std::shared_ptr<Outcome> outcome;
    NodeId node;
    FailureKind failure = FailureKind::kCrash;
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (priority != o.priority) return priority > o.priority;
      return seq > o.seq;
    }
  };

  struct PendingInjection {
    NodeId node;
    FailureKind kind;
    std::uint64_t at_completion;
  };

  // Message channel to one slot thread.
  struct SlotWorker {
    std::thread thread;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::function<void()>> inbox;
    bool quit = false;
  };

  struct CacheEntry {
    Sha256 node;
    std::size_t partition;
    std::shared_ptr<const Outcome> outcome;
    std::size_t bytes;
  };

  void push(Event e);
  void step();
  void schedule_pass();
  void dispatch(std::vector<std::pair<std::uint32_t, Assignment>>& started);
  Outcome execute(const Job& job, const TaskKey& key, NodeId node) const;
  void on_complete(const Event& e);
  void on_tick();
  void fire_injection(NodeId node, FailureKind kind);
  void declare_dead(NodeId node);
  void requeue(const Assignment& a);
  void enqueue_stage(Job& job);
  void finish_stage(Job& job);
  void fail_job(Job& job, std::uint32_t stage, const std::string& what);
  void check_feasible();
  void place_receiver();
  Job& job_ref(JobId id);
  const Job& job_ref(JobId id) const;
  std::shared_ptr<const Outcome> cache_lookup(NodeId node, const Sha256& key,
                                              std::size_t partition);
  void cache_insert(NodeId node, const Sha256& key, std::size_t partition,
                    std::shared_ptr<const Outcome> outcome);
  void slot_main(SlotWorker& w);

  ClusterConfig config_;
  BlockStore& store_;
  bool started_ = false;
  Micros now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t completions_ = 0;

  std::vector<Slot> slots_;
  std::vector<std::uint32_t> slot_order_;  // seeded permutation of slot indices
  std::vector<std::unique_ptr<SlotWorker>> workers_;
  std::vector<NodeState> nodes_;
  bool receiver_wanted_ = false;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::map<TaskKey, std::uint32_t> queue_;  // queued task -> attempt
  std::map<JobId, Job> jobs_;
  JobId next_job_ = 1;
  std::vector<PendingInjection> pending_injections_;

  std::vector<std::list<CacheEntry>> caches_;
  std::vector<std::size_t> cache_bytes_;

  std::vector<std::string> trace_;
};

}  // namespace gridstream
