#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "gridstream/analytics.hpp"
#include "gridstream/blockstore.hpp"
#include "gridstream/cluster.hpp"
#include "gridstream/errors.hpp"
#include "gridstream/generator.hpp"
#include "gridstream/sgf.hpp"
#include "gridstream/sgr.hpp"
#include "gridstream/streaming.hpp"
#include "support.hpp"

using namespace gridstream;

namespace {

constexpr Micros kW = 100'000'000;  // 100 s

// 2 cycles x 2 taus x 2 variables, small grid.
const gstest::TempDir& corpus() {
  static const gstest::TempDir dir;
  static const bool ready = [] {
    GeneratorSpec spec;
    spec.seed = 9;
    spec.cycles = 2;
    spec.taus = {24, 48};
    spec.variables = {"gst", "pres"};
    spec.geometry = GridGeometry::canonical(6, 12);
    spec.missing_fraction = 0.15;
    generate(spec, dir.path());
    return true;
  }();
  (void)ready;
  return dir;
}

ClusterConfig cluster_config() {
  ClusterConfig c;
  c.nodes = 3;
  c.workers_per_node = 2;
  return c;
}

StreamConfig stream_config(Micros window = kW) {
  StreamConfig sc;
  sc.window = window;
  sc.stats = {StatKind::kMean, StatKind::kMin, StatKind::kMax, StatKind::kStddev};
  sc.variation = Variation::kPerLat;
  sc.variables = {"gst", "pres"};
  return sc;
}

struct Rig {
  BlockStore store{3, 2};
  Cluster cluster;
  explicit Rig(ClusterConfig c = cluster_config()) : cluster(c, store) { cluster.start(); }
};

Arrival arrival_of(const std::filesystem::path& p, Micros t) {
  const std::string s = gstest::slurp(p);
  Arrival a;
  a.time = t;
  a.name = p.filename().string();
  a.data.assign(reinterpret_cast<const std::byte*>(s.data()),
                reinterpret_cast<const std::byte*>(s.data()) + s.size());
  return a;
}

// File i arrives at i * gap.
void feed(StreamEngine& engine, Micros gap) {
  const auto paths = gstest::sgf_files(corpus().path());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Micros t = static_cast<Micros>(i) * gap;
    engine.advance_to(t);
    engine.enqueue_file(paths[i], t);
  }
  engine.flush();
}

}  // namespace

TEST(Stream, WindowsAreHalfOpen) {
  Rig rig;
  StreamEngine engine(stream_config(), rig.cluster);
  EXPECT_EQ(engine.batch_of(0), 0);
  EXPECT_EQ(engine.batch_of(kW - 1), 0);
  EXPECT_EQ(engine.batch_of(kW), 1);
  EXPECT_EQ(engine.batch_of(kW + 1), 1);

  const auto paths = gstest::sgf_files(corpus().path());
  engine.enqueue_file(paths[0], kW - 1);
  engine.enqueue_file(paths[1], kW);
  engine.flush();
  const auto summary = engine.stop();
  ASSERT_EQ(summary.batches.size(), 2u);
  EXPECT_EQ(summary.batches[0].members, std::vector<std::string>{paths[0].filename().string()});
  EXPECT_EQ(summary.batches[1].members, std::vector<std::string>{paths[1].filename().string()});
  EXPECT_EQ(summary.batches[1].window_start, kW);
}

TEST(Stream, PhaseShiftsWindowEdges) {
  Rig rig;
  StreamConfig sc = stream_config();
  sc.phase = seconds(30);
  StreamEngine engine(sc, rig.cluster);
  EXPECT_EQ(engine.batch_of(seconds(29)), -1);
  EXPECT_EQ(engine.batch_of(seconds(30)), 0);
  EXPECT_EQ(engine.batch_of(seconds(130)), 1);
}

TEST(Stream, EmptyWindowsReemitPreviousResult) {
  gstest::TempDir out;
  Rig rig;
  StreamConfig sc = stream_config();
  sc.results_dir = out.path();
  StreamEngine engine(sc, rig.cluster);
  engine.enqueue_file(gstest::sgf_files(corpus().path())[0], seconds(1));
  engine.advance_to(3 * kW);
  const auto summary = engine.stop();
  ASSERT_EQ(summary.batches.size(), 3u);
  EXPECT_TRUE(summary.batches[1].members.empty());
  EXPECT_EQ(summary.batches[1].metrics.tasks_total, 0u);
  const std::string first = gstest::slurp(out / "batch_0.sgr");
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(gstest::slurp(out / "batch_1.sgr"), first);
  EXPECT_EQ(gstest::slurp(out / "batch_2.sgr"), first);
  EXPECT_EQ(gstest::slurp(out / "latest.sgr"), first);
}

TEST(Stream, StopClosesIntake) {
  Rig rig;
  StreamEngine engine(stream_config(), rig.cluster);
  const auto paths = gstest::sgf_files(corpus().path());
  engine.enqueue_file(paths[0], 0);
  const auto a = engine.stop();
  const auto b = engine.stop();
  EXPECT_TRUE(engine.stopped());
  EXPECT_EQ(a.batches_processed, b.batches_processed);
  EXPECT_THROW(engine.enqueue_file(paths[1], 1), StreamClosedError);
  EXPECT_THROW(engine.enqueue(arrival_of(paths[1], 1)), StreamClosedError);
}

TEST(Stream, ArrivalIntoClosedWindowRejected) {
  Rig rig;
  StreamEngine engine(stream_config(), rig.cluster);
  engine.advance_to(2 * kW);
  EXPECT_EQ(engine.next_batch(), 2);
  EXPECT_THROW(engine.enqueue_file(gstest::sgf_files(corpus().path())[0], kW + 5), ConfigError);
  EXPECT_THROW(engine.enqueue_file(corpus() / "absent.sgf", 2 * kW), IoError);
}

TEST(Stream, ConfigValidation) {
  Rig rig;
  StreamConfig sc = stream_config();
  sc.window = 0;
  EXPECT_THROW(StreamEngine(sc, rig.cluster), ConfigError);
  sc = stream_config();
  sc.variables.clear();
  EXPECT_THROW(StreamEngine(sc, rig.cluster), ConfigError);
  sc = stream_config();
  sc.combine_mode = CombineMode::kPaperPairwise;
  EXPECT_THROW(StreamEngine(sc, rig.cluster), ConfigError);
  sc.stats = {StatKind::kMean};
  EXPECT_NO_THROW(StreamEngine(sc, rig.cluster));
}

TEST(Stream, OneSlotClusterCannotHostReceiver) {
  BlockStore store(1, 1);
  ClusterConfig c;
  c.nodes = 1;
  c.workers_per_node = 1;
  Cluster cluster(c, store);
  cluster.start();
  EXPECT_THROW(StreamEngine(stream_config(), cluster), InsufficientResourcesError);
}

TEST(Stream, MalformedAndIncompleteMembersCounted) {
  Rig rig;
  StreamEngine engine(stream_config(), rig.cluster);
  Arrival junk;
  junk.time = 1;
  junk.name = "junk.sgf";
  junk.data = {std::byte{'S'}, std::byte{'G'}};
  engine.enqueue(junk);
  // Single-variable files lack the other requested variable.
  engine.enqueue_file(gstest::sgf_files(corpus().path())[0], 2);
  engine.flush();
  const auto summary = engine.stop();
  ASSERT_EQ(summary.batches.size(), 1u);
  EXPECT_EQ(summary.batches[0].members.size(), 2u);
  EXPECT_EQ(summary.batches[0].skipped_members, 2u);
  EXPECT_EQ(summary.files_seen, 2u);
}

TEST(Stream, StateAfterEachBatchMatchesOracleOverPrefix) {
  Rig rig;
  const StreamConfig sc = stream_config();
  StreamEngine engine(sc, rig.cluster);
  const auto paths = gstest::sgf_files(corpus().path());
  std::vector<GridTensor> seen;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Micros t = static_cast<Micros>(i) * kW + seconds(3);
    engine.enqueue_file(paths[i], t);
    seen.push_back(parse_sgf(read_file(paths[i])));
    engine.advance_to(static_cast<Micros>(i + 1) * kW);
    const ResultTensor latest = engine.latest();
    for (const auto& var : sc.variables) {
      for (StatKind stat : sc.stats) {
        const auto ref = gstest::reference_stat(seen, stat, sc.variation, var);
        const auto* got = latest.find(stat, var);
        const bool any = std::any_of(seen.begin(), seen.end(), [&](const GridTensor& g) { return g.has(var); });
        if (!any) {
          EXPECT_EQ(got, nullptr);
          continue;
        }
        ASSERT_NE(got, nullptr) << "batch " << i << " " << var;
        const auto why = gstest::compare(got->field, ref, stat, 1e-9);
        ASSERT_TRUE(why.empty()) << "batch " << i << " " << var << " " << to_string(stat) << ": " << why;
      }
    }
  }
}

TEST(Stream, ResultIndependentOfWindowing) {
  ResultTensor base;
  {
    Rig rig;
    StreamEngine engine(stream_config(3 * kW), rig.cluster);
    feed(engine, seconds(10));
    base = engine.latest();
  }
  for (Micros w : {kW / 7, kW / 2, 9 * kW}) {
    Rig rig;
    StreamEngine engine(stream_config(w), rig.cluster);
    feed(engine, seconds(10));
    const ResultTensor got = engine.latest();
    ASSERT_EQ(got.entries().size(), base.entries().size());
    for (const auto& e : base.entries()) {
      const auto why = gstest::compare(got.field(e.stat, e.variable), e.field, e.stat, 1e-9);
      EXPECT_TRUE(why.empty()) << "window " << w << " " << e.variable << ": " << why;
    }
  }
}

TEST(Stream, CheckpointRestoreContinuesBitForBit) {
  gstest::TempDir dir;
  const auto paths = gstest::sgf_files(corpus().path());
  const auto run_to_end = [&](StreamEngine& engine, std::size_t from) {
    for (std::size_t i = from; i < paths.size(); ++i) {
      const Micros t = static_cast<Micros>(i) * seconds(40);
      engine.advance_to(t);
      engine.enqueue_file(paths[i], t);
    }
    engine.flush();
  };

  Rig straight;
  StreamEngine reference(stream_config(), straight.cluster);
  run_to_end(reference, 0);

  Rig first;
  StreamEngine engine(stream_config(), first.cluster);
  for (std::size_t i = 0; i < 5; ++i) {
    const Micros t = static_cast<Micros>(i) * seconds(40);
    engine.advance_to(t);
    engine.enqueue_file(paths[i], t);
  }
  engine.checkpoint(dir / "ck");
  engine.stop();

  Rig second;
  auto resumed = StreamEngine::restore(dir / "ck", stream_config(), second.cluster);
  EXPECT_EQ(resumed->next_batch(), engine.next_batch());
  EXPECT_TRUE(bit_identical(resumed->state(), engine.state()));
  run_to_end(*resumed, 5);
  EXPECT_TRUE(bit_identical(resumed->state(), reference.state()));
  EXPECT_EQ(format_sgr(resumed->latest()), format_sgr(reference.latest()));
  EXPECT_EQ(resumed->summary().files_seen, paths.size());
}

TEST(Stream, CheckpointErrorsAreTyped) {
  gstest::TempDir dir;
  Rig rig;
  EXPECT_THROW(StreamEngine::restore(dir / "none", stream_config(), rig.cluster), StartFreshError);
  write_file_atomic(dir / "empty", {});
  EXPECT_THROW(StreamEngine::restore(dir / "empty", stream_config(), rig.cluster), StartFreshError);

  StreamEngine engine(stream_config(), rig.cluster);
  feed(engine, seconds(30));
  engine.checkpoint(dir / "ck");
  Bytes bytes = read_file(dir / "ck");

  StreamConfig other = stream_config();
  other.variation = Variation::kGlobal;
  EXPECT_THROW(StreamEngine::restore(dir / "ck", other, rig.cluster), CheckpointError);
  EXPECT_THROW(decode_checkpoint(bytes, other), CheckpointError);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    Bytes bad = bytes;
    bad[rng() % bad.size()] ^= static_cast<std::byte>(1 + rng() % 255);
    EXPECT_THROW(decode_checkpoint(bad, stream_config()), CheckpointError);
    bad.resize(rng() % bytes.size());
    if (!bad.empty()) {
      EXPECT_THROW(decode_checkpoint(bad, stream_config()), CheckpointError);
    }
  }
}

TEST(Stream, CheckpointCodecRoundTrips) {
  Rig rig;
  StreamEngine engine(stream_config(), rig.cluster);
  const auto paths = gstest::sgf_files(corpus().path());
  feed(engine, seconds(30));
  const std::vector<Arrival> pending = {arrival_of(paths[0], 5 * kW), arrival_of(paths[1], 5 * kW + 1)};
  const Bytes bytes = encode_checkpoint(engine.config(), 7, engine.state(), engine.latest(), pending, 11, 6);
  const CheckpointData d = decode_checkpoint(bytes, engine.config());
  EXPECT_EQ(d.next_batch, 7);
  EXPECT_TRUE(bit_identical(d.state, engine.state()));
  EXPECT_EQ(format_sgr(d.latest), format_sgr(engine.latest()));
  ASSERT_EQ(d.pending.size(), 2u);
  EXPECT_EQ(d.pending[1].name, pending[1].name);
  EXPECT_EQ(d.pending[1].time, pending[1].time);
  EXPECT_EQ(d.pending[1].data, pending[1].data);
  EXPECT_EQ(d.files_seen, 11u);
  EXPECT_EQ(d.batches_processed, 6u);
}

TEST(Stream, NodeLossMidBatchKeepsResultExactlyOnce) {
  const auto run = [](std::optional<Micros> kill) {
    Rig rig;
    if (kill) rig.cluster.inject_failure(NodeId{1}, FailureTrigger::at_time(*kill));
    StreamEngine engine(stream_config(), rig.cluster);
    feed(engine, seconds(45));
    auto summary = engine.stop();
    return std::make_tuple(engine.state(), summary, rig.cluster.dead_nodes());
  };
  const auto [clean_state, clean, none] = run(std::nullopt);
  EXPECT_TRUE(none.empty());
  // Batch 1 closes at 2W; kill shortly after its jobs start.
  const auto [state, summary, dead] = run(2 * kW + seconds(0.3));
  EXPECT_EQ(dead.size(), 1u);
  EXPECT_TRUE(bit_identical(state, clean_state));
  EXPECT_EQ(summary.files_seen, clean.files_seen);
  std::uint64_t rescheduled = 0;
  for (const auto& b : summary.batches) rescheduled += b.metrics.tasks_rescheduled;
  EXPECT_GT(rescheduled, 0u);
}

TEST(Stream, PairwiseMeanStreams) {
  Rig rig;
  StreamConfig sc = stream_config();
  sc.stats = {StatKind::kMean};
  sc.combine_mode = CombineMode::kPaperPairwise;
  StreamEngine engine(sc, rig.cluster);
  feed(engine, seconds(60));
  const ResultTensor r = engine.latest();
  ASSERT_NE(r.find(StatKind::kMean, "gst"), nullptr);
  EXPECT_EQ(r.field(StatKind::kMean, "gst").geometry(), result_geometry(GridGeometry::canonical(6, 12), sc.variation));
}

TEST(Stream, ConcurrentEnqueue) {
  Rig rig;
  StreamEngine engine(stream_config(10 * kW), rig.cluster);
  const auto paths = gstest::sgf_files(corpus().path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < paths.size(); i += 4) engine.enqueue_file(paths[i], seconds(static_cast<double>(i)));
    });
  }
  for (auto& t : threads) t.join();
  engine.flush();
  const auto summary = engine.stop();
  ASSERT_EQ(summary.batches.size(), 1u);
  EXPECT_EQ(summary.batches[0].members.size(), paths.size());
}
