#include "gridstream/streaming.hpp"

#include <algorithm>
#include <set>

#include "gridstream/errors.hpp"
#include "gridstream/sgf.hpp"
#include "gridstream/sgr.hpp"

namespace gridstream {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

const char* combine_name(CombineMode mode) {
  return mode == CombineMode::kExact ? "merge" : "pairwise-mean";
}

}  // namespace

void StreamConfig::validate() const {
  if (window <= 0) throw ConfigError("stream window must be positive");
  if (stats.empty()) throw ConfigError("at least one statistic required");
  if (variables.empty()) throw ConfigError("at least one variable required");
  for (const auto& v : variables) {
    if (!is_valid_variable_code(v)) throw ConfigError("invalid variable code '" + v + "'");
  }
  if (combine_mode == CombineMode::kPaperPairwise) {
    for (StatKind s : stats) {
      if (s != StatKind::kMean) throw ConfigError("paper-pairwise combine is only defined for mean");
    }
  }
}

bool bit_identical(const StreamState& a, const StreamState& b) noexcept {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !bit_identical(ia->second, ib->second)) return false;
  }
  return true;
}

StreamEngine::StreamEngine(StreamConfig config, Cluster& cluster)
    : config_(std::move(config)), cluster_(cluster) {
  config_.validate();
  cluster_.reserve_receiver();
  next_batch_ = batch_of(cluster_.now());
}

Micros StreamEngine::window_start(std::int64_t index) const {
  return config_.phase + index * config_.window;
}

std::int64_t StreamEngine::batch_of(Micros t) const {
  return floor_div(t - config_.phase, config_.window);
}

void StreamEngine::enqueue_file(const std::filesystem::path& path, Micros at) {
  Arrival a;
  a.time = at;
  a.name = path.filename().string();
  a.data = read_file(path);
  enqueue(std::move(a));
}

void StreamEngine::enqueue(Arrival arrival) {
  std::lock_guard lock(mu_);
  if (stopped_) throw StreamClosedError("stream is stopped; cannot accept " + arrival.name);
  const std::int64_t batch = batch_of(arrival.time);
  if (batch < next_batch_) {
    throw ConfigError("arrival of " + arrival.name + " at " + format_seconds(arrival.time) +
                      " s falls in window " + std::to_string(batch) + ", which already closed");
  }
  cluster_.log("arrive", arrival.name + " b" + std::to_string(batch));
  ++summary_.files_seen;
  pending_.push_back(std::move(arrival));
}

void StreamEngine::advance_to(Micros t) {
  std::lock_guard lock(mu_);
  while (window_start(next_batch_) + config_.window <= t) {
    run_batch(next_batch_);
    ++next_batch_;
  }
  cluster_.advance_to(t);
}

void StreamEngine::flush() {
  Micros end = 0;
  {
    std::lock_guard lock(mu_);
    if (pending_.empty()) return;
    Micros latest = pending_.front().time;
    for (const auto& a : pending_) latest = std::max(latest, a.time);
    end = window_start(batch_of(latest)) + config_.window;
  }
  advance_to(end);
}

void StreamEngine::run_batch(std::int64_t index) {
  const Micros start = window_start(index);
  const Micros end = start + config_.window;
  cluster_.advance_to(end);

  std::vector<Arrival> members;
  std::vector<Arrival> rest;
  for (auto& a : pending_) (batch_of(a.time) == index ? members : rest).push_back(std::move(a));
  pending_ = std::move(rest);
  std::stable_sort(members.begin(), members.end(),
                   [](const Arrival& a, const Arrival& b) { return a.time < b.time; });

  BatchReport report;
  report.index = index;
  report.window_start = start;
  report.window_end = end;
  cluster_.log("window", "b" + std::to_string(index) + " start=" + format_seconds(start) +
                             " end=" + format_seconds(end) +
                             " members=" + std::to_string(members.size()));

  std::vector<PlanNodePtr> sources;
  for (const auto& m : members) {
    report.members.push_back(m.name);
    std::optional<GridTensor> tensor;
    try {
      tensor = parse_sgf(m.data);
    } catch (const FormatError&) {
      ++report.skipped_members;
      cluster_.log("reject", m.name);
      continue;
    }
    const bool complete = std::all_of(config_.variables.begin(), config_.variables.end(),
                                      [&](const std::string& v) { return tensor->has(v); });
    if (!complete) ++report.skipped_members;
    sources.push_back(PlanNode::source({cluster_.store().put_block(m.data)}));
  }

  BatchMetrics& agg = report.metrics;
  agg.submitted_at = cluster_.now();
  if (!sources.empty()) {
    const PlanNodePtr input = sources.size() == 1 ? sources.front() : PlanNode::union_of(sources);
    std::map<Sha256, JobId> jobs;
    std::map<std::pair<std::string, StatKind>, Sha256> key_of;
    for (const auto& var : config_.variables) {
      for (StatKind stat : config_.stats) {
        const auto c = combine_node(build_plan(input, stat, config_.variation, var, config_.combine_mode));
        key_of[{var, stat}] = c->id();
        if (!jobs.contains(c->id())) jobs[c->id()] = cluster_.submit(c);
      }
    }
    std::map<Sha256, Payload> outputs;
    std::optional<Micros> first_start;
    Micros last_end = agg.submitted_at;
    for (const auto& [cid, job] : jobs) {
      JobResult r;
      try {
        r = cluster_.await(job);
      } catch (const JobFailedError& e) {
        throw JobFailedError(e.job(), e.stage(),
                             "batch " + std::to_string(index) + ": " + e.what());
      }
      const BatchMetrics m = cluster_.metrics(job);
      if (m.tasks_total > 0) {
        const Micros s = m.submitted_at + m.scheduling_delay;
        first_start = first_start ? std::min(*first_start, s) : s;
        last_end = std::max(last_end, m.finished_at);
      }
      agg.tasks_total += m.tasks_total;
      agg.tasks_rescheduled += m.tasks_rescheduled;
      agg.operator_invocations += m.operator_invocations;
      agg.bytes_read += m.bytes_read;
      agg.elements_dropped += m.elements_dropped;
      outputs[cid] = r.partitions.empty() ? Payload{} : std::move(r.partitions.front().second);
    }
    if (first_start) {
      agg.scheduling_delay = *first_start - agg.submitted_at;
      agg.processing_time = last_end - *first_start;
    }

    const CombineOperator& op = OperatorRegistry::global().combine(combine_name(config_.combine_mode));
    for (const auto& [key, cid] : key_of) {
      const Payload& out = outputs.at(cid);
      if (out.empty()) continue;
      const auto it = state_.find(key);
      if (it == state_.end()) {
        state_.emplace(key, out.front());
      } else {
        it->second = op.combine(it->second, out.front());
      }
    }
    for (const auto& [key, element] : state_) {
      const auto& [var, stat] = key;
      const auto tail = build_plan(stat, config_.variation, var, config_.combine_mode);
      if (auto field = apply_tail(tail, element)) latest_.add(stat, var, field->renamed(var));
    }
  }
  agg.finished_at = cluster_.now();
  agg.finished = true;

  if (!config_.results_dir.empty()) {
    report.artifact = config_.results_dir / ("batch_" + std::to_string(index) + ".sgr");
    export_text(latest_, report.artifact);
    export_text(latest_, config_.results_dir / "latest.sgr");
  }
  cluster_.log("batch-done", "b" + std::to_string(index) + " tasks=" +
                                 std::to_string(agg.tasks_total) + " rescheduled=" +
                                 std::to_string(agg.tasks_rescheduled));
  ++summary_.batches_processed;
  summary_.batches.push_back(std::move(report));
}

StreamSummary StreamEngine::stop() {
  std::lock_guard lock(mu_);
  if (!stopped_) {
    stopped_ = true;
    cluster_.log("stream-stop", "batches=" + std::to_string(summary_.batches_processed) +
                                    " pending=" + std::to_string(pending_.size()));
  }
  return summary_;
}

bool StreamEngine::stopped() const {
  std::lock_guard lock(mu_);
  return stopped_;
}

std::int64_t StreamEngine::next_batch() const {
  std::lock_guard lock(mu_);
  return next_batch_;
}

StreamState StreamEngine::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

ResultTensor StreamEngine::latest() const {
  std::lock_guard lock(mu_);
  return latest_;
}

StreamSummary StreamEngine::summary() const {
  std::lock_guard lock(mu_);
  return summary_;
}

void StreamEngine::checkpoint(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  const Bytes bytes = encode_checkpoint(config_, next_batch_, state_, latest_, pending_,
                                        summary_.files_seen, summary_.batches_processed);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  write_file_atomic(path, bytes);
}

std::unique_ptr<StreamEngine> StreamEngine::restore(const std::filesystem::path& path,
                                                    StreamConfig config, Cluster& cluster) {
  std::error_code ec;
  if (path.empty() || !std::filesystem::exists(path, ec) ||
      std::filesystem::file_size(path, ec) == 0) {
    throw StartFreshError("no checkpoint at '" + path.string() + "'");
  }
  Bytes bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError& e) {
    throw StartFreshError(std::string("checkpoint unreadable: ") + e.what());
  }
  CheckpointData data = decode_checkpoint(bytes, config);
  auto engine = std::make_unique<StreamEngine>(std::move(config), cluster);
  engine->next_batch_ = data.next_batch;
  engine->state_ = std::move(data.state);
  engine->latest_ = std::move(data.latest);
  engine->pending_ = std::move(data.pending);
  engine->summary_.files_seen = data.files_seen;
  engine->summary_.batches_processed = data.batches_processed;
  cluster.log("restore", "next=b" + std::to_string(engine->next_batch_));
  return engine;
}

}  // namespace gridstream
