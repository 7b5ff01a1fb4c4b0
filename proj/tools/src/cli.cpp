#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "gridstream/analytics.hpp"
#include "gridstream/blockstore.hpp"
#include "gridstream/cluster.hpp"
#include "gridstream/dataset.hpp"
#include "gridstream/errors.hpp"
#include "gridstream/filename.hpp"
#include "gridstream/generator.hpp"
#include "gridstream/sgf.hpp"
#include "gridstream/sgr.hpp"
#include "gridstream/streaming.hpp"

namespace gridstream::cli {

namespace fs = std::filesystem;

void Report::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::string Report::text() const {
  std::string s;
  for (const auto& [k, v] : entries_) s += k + "=" + v + "\n";
  return s;
}

Report Report::parse(const std::string& text) {
  Report r;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw FormatError("report line " + std::to_string(n) + " is not key=value");
    }
    r.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return r;
}

const std::string* Report::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Failure {
  int code;
  std::string kind;
};

Failure classify(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return {kUsage, "UsageError"};
  if (dynamic_cast<const ConfigError*>(&e)) return {kUsage, "ConfigError"};
  if (dynamic_cast<const InsufficientResourcesError*>(&e)) {
    return {kResource, "InsufficientResourcesError"};
  }
  if (dynamic_cast<const VariableAbsentError*>(&e)) return {kData, "VariableAbsentError"};
  if (dynamic_cast<const TruncationError*>(&e)) return {kData, "TruncationError"};
  if (dynamic_cast<const FormatError*>(&e)) return {kData, "FormatError"};
  if (dynamic_cast<const FilenameError*>(&e)) return {kData, "FilenameError"};
  if (dynamic_cast<const DuplicateVariableError*>(&e)) return {kData, "DuplicateVariableError"};
  if (dynamic_cast<const GeometryError*>(&e)) return {kData, "GeometryError"};
  if (dynamic_cast<const JobFailedError*>(&e)) return {kRuntime, "JobFailedError"};
  if (dynamic_cast<const CheckpointError*>(&e)) return {kRuntime, "CheckpointError"};
  if (dynamic_cast<const IoError*>(&e)) return {kRuntime, "IoError"};
  if (dynamic_cast<const StoreUnavailableError*>(&e)) return {kRuntime, "StoreUnavailableError"};
  return {kRuntime, "Error"};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GRIDSTREAM_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::char_traits<char>::length(env)) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("GRIDSTREAM_SEED is not an unsigned integer: '") + env + "'");
  }
  return 0;
}

std::vector<fs::path> list_sgf(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".sgf") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// True when the name parses and names none of the wanted variables.
bool excluded_by_name(const fs::path& file, const std::vector<std::string>& vars) {
  try {
    const FileMeta meta = parse_filename(file.filename().string());
    return std::none_of(meta.variables.begin(), meta.variables.end(), [&](const std::string& v) {
      return std::find(vars.begin(), vars.end(), v) != vars.end();
    });
  } catch (const FilenameError&) {
    return false;
  }
}

std::vector<StatKind> parse_stats(const std::string& text) {
  std::vector<StatKind> out;
  for (const auto& s : split_list(text)) out.push_back(parse_stat(s));
  if (out.empty()) throw UsageError("--stat needs at least one statistic");
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ",") + i;
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

void report_metrics(Report& r, const std::string& prefix, const BatchMetrics& m) {
  r.set(prefix + "scheduling_delay_s", format_seconds(m.scheduling_delay));
  r.set(prefix + "processing_time_s", format_seconds(m.processing_time));
  r.set(prefix + "tasks_total", m.tasks_total);
  r.set(prefix + "tasks_rescheduled", m.tasks_rescheduled);
  r.set(prefix + "operator_invocations", m.operator_invocations);
  r.set(prefix + "bytes_read", m.bytes_read);
}

struct ClusterFlags {
  std::uint32_t workers = 4;
  std::uint32_t nodes = 2;
  std::uint32_t replication = 2;
  bool virtual_time = false;
  std::optional<std::uint64_t> seed;

  ClusterConfig config() const {
    if (nodes == 0) throw UsageError("--nodes must be at least 1");
    if (workers % nodes != 0 || workers == 0) {
      throw UsageError("--workers (" + std::to_string(workers) +
                       ") must be a positive multiple of --nodes (" + std::to_string(nodes) + ")");
    }
    ClusterConfig c;
    c.nodes = nodes;
    c.workers_per_node = workers / nodes;
    c.clock = virtual_time ? ClockMode::kVirtual : ClockMode::kReal;
    c.seed = resolve_seed(seed);
    return c;
  }

  void echo(Report& r) const {
    r.set("config.workers", workers);
    r.set("config.nodes", nodes);
    r.set("config.replication", replication);
    r.set("config.clock", virtual_time ? "virtual" : "real");
  }
};

void add_cluster_flags(CLI::App* cmd, ClusterFlags& f) {
  cmd->add_option("--workers", f.workers, "Total workers across all nodes")->check(CLI::PositiveNumber);
  cmd->add_option("--nodes", f.nodes, "Simulated nodes")->check(CLI::PositiveNumber);
  cmd->add_option("--replication", f.replication, "Block replication factor")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--virtual-time", f.virtual_time, "Use the deterministic simulated clock");
  cmd->add_option("--seed", f.seed, "Seed (falls back to GRIDSTREAM_SEED)");
}

// Finishes a command: writes the report (and prints it) whether or not the
// run succeeded.
int finish(Report& report, const std::optional<fs::path>& report_path, std::ostream& out,
           std::ostream& err, const std::exception* failure) {
  int code = kOk;
  if (failure) {
    const Failure f = classify(*failure);
    code = f.code;
    report.set("status", "error");
    report.set("error.kind", f.kind);
    report.set("error.message", failure->what());
    report.set("exit_code", std::to_string(code));
    err << "error: " << failure->what() << "\n";
  } else {
    report.set("status", "ok");
    report.set("exit_code", "0");
  }
  if (report_path) {
    try {
      write_text(*report_path, report.text());
    } catch (const Error& e) {
      err << "error: cannot write report: " << e.what() << "\n";
      if (code == kOk) code = kRuntime;
    }
  }
  out << report.text();
  return code;
}

// ---------------------------------------------------------------------------

struct GenerateFlags {
  std::optional<std::uint64_t> seed;
  std::uint32_t cycles = 1;
  std::uint32_t nlat = 361;
  std::uint32_t nlon = 720;
  double missing = 0.0;
  std::string taus = "24,48,72,96,120,144,168";
  std::string vars = "gst,pres,airtemp,wind";
  std::string first_cycle = "2018010100";
  bool merge = false;
  std::string out;
};

int cmd_generate(const GenerateFlags& f, std::ostream& out, std::ostream& err) {
  try {
    GeneratorSpec spec;
    spec.seed = resolve_seed(f.seed);
    spec.cycles = f.cycles;
    spec.geometry = GridGeometry::canonical(f.nlat, f.nlon);
    spec.missing_fraction = f.missing;
    spec.taus.clear();
    for (const auto& t : split_list(f.taus)) {
      try {
        std::size_t used = 0;
        spec.taus.push_back(std::stoi(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw UsageError("bad tau '" + t + "'");
      }
    }
    spec.variables = split_list(f.vars);
    for (const auto& v : spec.variables) {
      if (!is_known_variable(v)) throw UsageError("unknown variable '" + v + "'");
    }
    try {
      spec.first_cycle = parse_cycle(f.first_cycle);
    } catch (const FilenameError& e) {
      throw UsageError(std::string("bad --first-cycle: ") + e.what());
    }
    spec.merge_variables = f.merge;
    spec.validate();
    for (const auto& name : generate(spec, f.out)) out << name << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return classify(e).code;
  }
}

// ---------------------------------------------------------------------------

struct AnalysisFlags {
  std::string stat = "mean";
  int variation = 1;
  std::string vars;
  std::string combine = "exact";
  std::string out = "results";
};

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& f) {
  cmd->add_option("--stat", f.stat, "mean|min|max|stddev (comma list allowed)");
  cmd->add_option("--variation", f.variation, "1 per cell, 2 per latitude, 3 per longitude, 4 global")
      ->check(CLI::Range(1, 4));
  cmd->add_option("--vars", f.vars, "Comma-separated variable codes")->required();
  cmd->add_option("--combine", f.combine, "exact|paper-pairwise")
      ->check(CLI::IsMember({"exact", "paper-pairwise"}));
  cmd->add_option("--out", f.out, "Output directory");
}

struct BatchFlags {
  std::string input;
  AnalysisFlags analysis;
  ClusterFlags cluster;
};

int cmd_batch(const BatchFlags& f, std::ostream& out, std::ostream& err) {
  Report report;
  const fs::path out_dir = f.analysis.out;
  std::optional<fs::path> report_path;
  try {
    report.set("command", "batch");
    report.set("config.input", f.input);
    report.set("config.stat", f.analysis.stat);
    report.set("config.variation", std::to_string(f.analysis.variation));
    report.set("config.vars", f.analysis.vars);
    report.set("config.combine", f.analysis.combine);
    f.cluster.echo(report);
    const ClusterConfig config = f.cluster.config();
    report.set("config.seed", config.seed);
    report_path = out_dir / "report.txt";

    const auto stats = parse_stats(f.analysis.stat);
    const Variation variation = variation_from_int(f.analysis.variation);
    const auto vars = split_list(f.analysis.vars);
    const CombineMode mode = parse_combine_mode(f.analysis.combine);

    BlockStore store(config.nodes, f.cluster.replication);
    Cluster cluster(config, store);
    cluster.start();

    std::vector<BlockId> blocks;
    std::size_t skipped = 0;
    for (const auto& file : list_sgf(f.input)) {
      if (excluded_by_name(file, vars)) {
        ++skipped;
        continue;
      }
      blocks.push_back(store.put_block(read_file(file)));
    }
    report.set("files_loaded", blocks.size());
    report.set("files_skipped", skipped);

    const Dataset files = Dataset::from_blocks(store, blocks, &cluster);
    ResultTensor result;
    std::size_t job = 0;
    std::exception_ptr failure;
    try {
      for (StatKind stat : stats) {
        for (const auto& var : vars) {
          const StatRun run = run_stat_detailed(files, stat, variation, {var}, mode);
          const std::string prefix = "batch." + std::to_string(job++) + ".";
          report.set(prefix + "stat", std::string(to_string(stat)));
          report.set(prefix + "variable", var);
          report_metrics(report, prefix, run.metrics.front());
          for (const auto& e : run.result.entries()) result.add(e.stat, e.variable, e.field);
        }
      }
    } catch (...) {
      failure = std::current_exception();
    }
    report.set("batches", job);
    const fs::path trace_path = out_dir / "trace.log";
    cluster.write_trace(trace_path);
    report.set("trace.path", trace_path.string());
    if (failure) std::rethrow_exception(failure);

    const fs::path result_path = out_dir / "batch.sgr";
    export_text(result, result_path);
    report.set("result.path", result_path.string());
    return finish(report, report_path, out, err, nullptr);
  } catch (const std::exception& e) {
    return finish(report, report_path, out, err, &e);
  }
}

// ---------------------------------------------------------------------------

struct StreamFlags {
  std::string watch;
  double window_seconds = 21600;
  double phase_seconds = 0;
  std::string script;
  std::string checkpoint;
  double duration_seconds = 0;
  double poll_seconds = 1;
  AnalysisFlags analysis;
  ClusterFlags cluster;
};

struct ScriptEvent {
  Micros time = 0;
  bool kill = false;
  std::string target;
  FailureKind failure = FailureKind::kCrash;
};

std::vector<ScriptEvent> parse_script(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read script " + path.string());
  std::vector<ScriptEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string t, verb, target, extra;
    if (!(words >> t)) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(n);
    if (!(words >> verb >> target)) throw UsageError(where + ": expected '<t> arrive|kill <arg>'");
    ScriptEvent ev;
    try {
      std::size_t used = 0;
      const double s = std::stod(t, &used);
      if (used != t.size() || !(s >= 0)) throw std::invalid_argument(t);
      ev.time = seconds(s);
    } catch (const std::exception&) {
      throw UsageError(where + ": bad time '" + t + "'");
    }
    if (verb == "arrive") {
      ev.kill = false;
    } else if (verb == "kill") {
      ev.kill = true;
      if (words >> extra) {
        if (extra == "silence") {
          ev.failure = FailureKind::kSilence;
        } else if (extra != "crash") {
          throw UsageError(where + ": unknown failure kind '" + extra + "'");
        }
      }
    } else {
      throw UsageError(where + ": unknown event '" + verb + "'");
    }
    if (!events.empty() && ev.time < events.back().time) {
      throw UsageError(where + ": events must be in time order");
    }
    ev.target = target;
    events.push_back(std::move(ev));
  }
  return events;
}

int cmd_stream(const StreamFlags& f, std::ostream& out, std::ostream& err) {
  Report report;
  const fs::path out_dir = f.analysis.out;
  std::optional<fs::path> report_path;
  try {
    report.set("command", "stream");
    report.set("config.watch", f.watch);
    report.set("config.window_s", format_seconds(seconds(f.window_seconds)));
    report.set("config.stat", f.analysis.stat);
    report.set("config.variation", std::to_string(f.analysis.variation));
    report.set("config.vars", f.analysis.vars);
    report.set("config.combine", f.analysis.combine);
    if (!f.script.empty()) report.set("config.script", f.script);
    f.cluster.echo(report);
    const ClusterConfig config = f.cluster.config();
    report.set("config.seed", config.seed);
    report_path = out_dir / "report.txt";

    StreamConfig sc;
    sc.window = seconds(f.window_seconds);
    sc.phase = seconds(f.phase_seconds);
    sc.stats = parse_stats(f.analysis.stat);
    sc.variation = variation_from_int(f.analysis.variation);
    sc.variables = split_list(f.analysis.vars);
    sc.combine_mode = parse_combine_mode(f.analysis.combine);
    sc.results_dir = out_dir;
    sc.validate();

    BlockStore store(config.nodes, f.cluster.replication);
    Cluster cluster(config, store);
    cluster.start();

    std::unique_ptr<StreamEngine> engine;
    if (!f.checkpoint.empty()) {
      try {
        engine = StreamEngine::restore(f.checkpoint, sc, cluster);
        report.set("checkpoint.restored", "true");
      } catch (const StartFreshError&) {
        report.set("checkpoint.restored", "false");
      }
    }
    if (!engine) engine = std::make_unique<StreamEngine>(sc, cluster);
    auto save = [&] {
      if (!f.checkpoint.empty()) engine->checkpoint(f.checkpoint);
    };

    std::exception_ptr failure;
    try {
      const fs::path watch = f.watch;
      if (!f.script.empty()) {
        const auto events = parse_script(f.script);
        for (const auto& ev : events) {
          if (ev.kill) cluster.inject_failure(parse_node_id(ev.target), FailureTrigger::at_time(ev.time), ev.failure);
        }
        for (const auto& ev : events) {
          if (ev.kill) continue;
          engine->advance_to(ev.time);
          save();
          const fs::path file = fs::path(ev.target).is_absolute() ? fs::path(ev.target) : watch / ev.target;
          engine->enqueue_file(file, ev.time);
        }
        engine->flush();
        save();
      } else if (f.cluster.virtual_time) {
        // Without a script, files arrive at their model cycle offset from
        // the earliest cycle in the directory.
        std::vector<std::pair<std::int64_t, fs::path>> files;
        for (const auto& p : list_sgf(watch)) {
          files.emplace_back(parse_filename(p.filename().string()).cycle, p);
        }
        std::stable_sort(files.begin(), files.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [cycle, p] : files) {
          const Micros t = (cycle - files.front().first) * 1'000'000;
          engine->advance_to(t);
          save();
          engine->enqueue_file(p, t);
        }
        engine->flush();
        save();
      } else {
        const auto t0 = std::chrono::steady_clock::now();
        std::set<fs::path> seen;
        for (;;) {
          const Micros elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();
          const Micros t = std::max(elapsed, cluster.now());
          engine->advance_to(t);
          save();
          for (const auto& p : list_sgf(watch)) {
            if (seen.insert(p).second) engine->enqueue_file(p, t);
          }
          if (elapsed >= seconds(f.duration_seconds)) break;
          std::this_thread::sleep_for(std::chrono::microseconds(seconds(f.poll_seconds)));
        }
        engine->flush();
        save();
      }
    } catch (...) {
      failure = std::current_exception();
    }

    const StreamSummary summary = engine->stop();
    report.set("files_seen", summary.files_seen);
    report.set("batches", summary.batches.size());
    for (std::size_t i = 0; i < summary.batches.size(); ++i) {
      const BatchReport& b = summary.batches[i];
      const std::string prefix = "batch." + std::to_string(i) + ".";
      report.set(prefix + "index", std::to_string(b.index));
      report.set(prefix + "window_start_s", format_seconds(b.window_start));
      report.set(prefix + "members", b.members.size());
      report.set(prefix + "skipped_members", b.skipped_members);
      report_metrics(report, prefix, b.metrics);
      if (!b.artifact.empty()) report.set(prefix + "artifact", b.artifact.string());
    }
    const fs::path trace_path = out_dir / "trace.log";
    cluster.write_trace(trace_path);
    report.set("trace.path", trace_path.string());
    if (failure) std::rethrow_exception(failure);
    if (!summary.batches.empty()) report.set("result.path", (out_dir / "latest.sgr").string());
    return finish(report, report_path, out, err, nullptr);
  } catch (const std::exception& e) {
    return finish(report, report_path, out, err, &e);
  }
}

// ---------------------------------------------------------------------------

int cmd_metrics(const std::string& report_path, bool csv, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw IoError("cannot read report " + report_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const Report r = Report::parse(buf.str());
    std::size_t batches = 0;
    if (const auto* b = r.find("batches")) {
      try {
        batches = std::stoul(*b);
      } catch (const std::exception&) {
        throw FormatError("report has a bad batch count '" + *b + "'");
      }
    }
    const char* columns[] = {"scheduling_delay_s", "processing_time_s", "tasks_total",
                             "tasks_rescheduled", "operator_invocations"};
    if (csv) {
      out << "batch";
      for (const char* c : columns) out << "," << c;
      out << "\n";
    }
    for (std::size_t i = 0; i < batches; ++i) {
      const std::string prefix = "batch." + std::to_string(i) + ".";
      if (csv) {
        out << i;
      } else {
        out << "batch " << i;
      }
      for (const char* c : columns) {
        const auto* v = r.find(prefix + c);
        if (!v) throw FormatError("report is missing " + prefix + c);
        if (csv) {
          out << "," << *v;
        } else {
          out << " " << c << "=" << *v;
        }
      }
      out << "\n";
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Micro-batch statistics over gridded forecast files", "gridstream"};
  app.require_subcommand(1);

  GenerateFlags gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write synthetic SGF1 files");
  generate_cmd->add_option("--seed", gen.seed, "Seed (falls back to GRIDSTREAM_SEED)");
  generate_cmd->add_option("--cycles", gen.cycles, "Model cycles")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--nlat", gen.nlat, "Latitude rows")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--nlon", gen.nlon, "Longitude columns")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--missing-frac", gen.missing, "Fraction of masked cells, [0, 1)");
  generate_cmd->add_option("--taus", gen.taus, "Comma-separated forecast hours");
  generate_cmd->add_option("--vars", gen.vars, "Comma-separated variables");
  generate_cmd->add_option("--first-cycle", gen.first_cycle, "First cycle, YYYYMMDDHH");
  generate_cmd->add_flag("--merge", gen.merge, "One multi-variable file per cycle and tau");
  generate_cmd->add_option("--out", gen.out, "Output directory")->required();

  BatchFlags batch;
  auto* batch_cmd = app.add_subcommand("batch", "Run one analysis over a directory of files");
  batch_cmd->add_option("--input", batch.input, "Directory of .sgf files")->required();
  add_analysis_flags(batch_cmd, batch.analysis);
  add_cluster_flags(batch_cmd, batch.cluster);

  StreamFlags stream;
  auto* stream_cmd = app.add_subcommand("stream", "Run the windowed streaming engine");
  stream_cmd->add_option("--watch", stream.watch, "Directory the files arrive in")->required();
  stream_cmd->add_option("--window-seconds", stream.window_seconds, "Tumbling window length");
  stream_cmd->add_option("--phase-seconds", stream.phase_seconds, "Window phase offset");
  stream_cmd->add_option("--script", stream.script, "Event script driving arrivals and kills");
  stream_cmd->add_option("--checkpoint", stream.checkpoint, "Checkpoint file to resume from and update");
  stream_cmd->add_option("--duration", stream.duration_seconds,
                         "Real-clock watch duration in seconds");
  stream_cmd->add_option("--poll-seconds", stream.poll_seconds, "Real-clock poll interval");
  add_analysis_flags(stream_cmd, stream.analysis);
  add_cluster_flags(stream_cmd, stream.cluster);

  std::string report_path;
  bool csv = false;
  auto* metrics_cmd = app.add_subcommand("metrics", "Summarize a run report");
  metrics_cmd->add_option("--report", report_path, "Report file")->required();
  metrics_cmd->add_flag("--csv", csv, "Emit CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsage;
  }

  if (generate_cmd->parsed()) return cmd_generate(gen, out, err);
  if (batch_cmd->parsed()) return cmd_batch(batch, out, err);
  if (stream_cmd->parsed()) {
    if (!(stream.window_seconds > 0)) {
      err << "error: --window-seconds must be positive\n";
      return kUsage;
    }
    return cmd_stream(stream, out, err);
  }
  return cmd_metrics(report_path, csv, out, err);
}

}  // namespace gridstream::cli
