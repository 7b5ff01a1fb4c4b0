#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridstream/analytics.hpp"
#include "gridstream/cluster.hpp"
#include "gridstream/result.hpp"

namespace gridstream {

struct StreamConfig {
  Micros window = 21'600'000'000;  // 6 h
  Micros phase = 0;                // windows are [phase + kW, phase + (k+1)W)
  std::vector<StatKind> stats = {StatKind::kMean};
  Variation variation = Variation::kPerCell;
  std::vector<std::string> variables;
  CombineMode combine_mode = CombineMode::kExact;
  // Where batch_<k>.sgr and latest.sgr go; empty disables artifacts.
  std::filesystem::path results_dir;

  // Throws ConfigError.
  void validate() const;
};

// One arrived file, captured with its bytes at arrival.
struct Arrival {
  Micros time = 0;
  std::string name;
  Bytes data;
};

struct BatchReport {
  std::int64_t index = 0;
  Micros window_start = 0;
  Micros window_end = 0;
  std::vector<std::string> members;
  std::size_t skipped_members = 0;  // members lacking a requested variable
  BatchMetrics metrics;             // aggregated over the batch's jobs
  std::filesystem::path artifact;
};

struct StreamSummary {
  std::uint64_t batches_processed = 0;
  std::uint64_t files_seen = 0;
  std::vector<BatchReport> batches;
};

// Aggregation state carried across batches, keyed by (variable, stat).
// Each value is the COMBINE output of that stat's plan so far.
using StreamState = std::map<std::pair<std::string, StatKind>, Element>;

bool bit_identical(const StreamState& a, const StreamState& b) noexcept;

// Micro-batch engine over tumbling windows. Arrivals are grouped by arrival
// time; when a window closes its members are stored as blocks, unioned
// into one dataset and run as cluster jobs up to COMBINE. The engine merges
// each batch's output into the carried state and finalizes the result.
//
// Public calls serialize on an internal mutex, so enqueue and stop may come
// from any thread.
class StreamEngine {
 public:
  // Reserves the receiver slot. Throws ConfigError or
  // InsufficientResourcesError.
  StreamEngine(StreamConfig config, Cluster& cluster);

  // Reads `path` now and queues it at simulated time `at`. Throws
  // StreamClosedError after stop, ConfigError for arrivals earlier than a
  // closed window, IoError for unreadable files.
  void enqueue_file(const std::filesystem::path& path, Micros at);
  void enqueue(Arrival arrival);

  // Closes and runs every window ending at or before `t`.
  void advance_to(Micros t);
  // Runs the window holding the latest pending arrival, if any.
  void flush();
  // Halts intake; pending arrivals in the open window stay unprocessed.
  // Idempotent.
  StreamSummary stop();

  bool stopped() const;
  std::int64_t next_batch() const;
  std::int64_t batch_of(Micros t) const;
  StreamState state() const;
  ResultTensor latest() const;
  StreamSummary summary() const;
  const StreamConfig& config() const noexcept { return config_; }

  // Writes a hash-sealed snapshot. Only valid between batches, which public
  // calls guarantee.
  void checkpoint(const std::filesystem::path& path) const;
  // Throws StartFreshError when `path` is missing or empty and
  // CheckpointError when it is corrupt or was taken under another config.
  static std::unique_ptr<StreamEngine> restore(const std::filesystem::path& path,
                                               StreamConfig config, Cluster& cluster);

 private:
  void run_batch(std::int64_t index);
  Micros window_start(std::int64_t index) const;

  StreamConfig config_;
  Cluster& cluster_;
  mutable std::mutex mu_;
  bool stopped_ = false;
  std::int64_t next_batch_ = 0;  // first window not yet run
  std::vector<Arrival> pending_;
  StreamState state_;
  ResultTensor latest_;
  StreamSummary summary_;
};

// Checkpoint encoding, exposed for tests.
Bytes encode_checkpoint(const StreamConfig& config, std::int64_t next_batch,
                        const StreamState& state, const ResultTensor& latest,
                        const std::vector<Arrival>& pending, std::uint64_t files_seen,
                        std::uint64_t batches_processed);

struct CheckpointData {
  std::int64_t next_batch = 0;
  StreamState state;
  ResultTensor latest;
  std::vector<Arrival> pending;
  std::uint64_t files_seen = 0;
  std::uint64_t batches_processed = 0;
};

// Throws CheckpointError on any hash, structure or config mismatch.
CheckpointData decode_checkpoint(std::span<const std::byte> bytes, const StreamConfig& config);

}  // namespace gridstream
