#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridstream/analytics.hpp"
#include "gridstream/blockstore.hpp"
#include "gridstream/cluster.hpp"
#include "gridstream/errors.hpp"
#include "gridstream/sgf.hpp"
#include "support.hpp"

using namespace gridstream;

namespace {

constexpr StatKind kStats[] = {StatKind::kMean, StatKind::kMin, StatKind::kMax, StatKind::kStddev};
constexpr Variation kVariations[] = {Variation::kPerCell, Variation::kPerLat, Variation::kPerLon,
                                     Variation::kGlobal};

struct Corpus {
  BlockStore store{3, 2};
  std::vector<GridTensor> files;
  std::vector<BlockId> blocks;

  void add(GridTensor t) {
    blocks.push_back(store.put_block(write_sgf(t)));
    files.push_back(std::move(t));
  }
};

// Files share one geometry; each holds a non-empty random subset of
// {a, b, c}. Magnitudes stay where squared deviations fit in a double.
void fill_random(Corpus& c, std::mt19937_64& rng, GridGeometry g, int n) {
  for (int i = 0; i < n; ++i) {
    std::vector<GridField> fields;
    for (const char* v : {"a", "b", "c"}) {
      if (rng() % 4 != 0 || (fields.empty() && v[0] == 'c')) {
        fields.push_back(gstest::random_field(rng, g, v, 0.3));
      }
    }
    c.add(GridTensor(1514764800 + 21600 * i, 6 * (i % 4), std::move(fields)));
  }
}

GridGeometry random_geometry(std::mt19937_64& rng) {
  return GridGeometry::canonical(1 + static_cast<std::uint32_t>(rng() % 9),
                                 1 + static_cast<std::uint32_t>(rng() % 9));
}

ClusterConfig small_cluster() {
  ClusterConfig c;
  c.nodes = 3;
  c.workers_per_node = 2;
  return c;
}

}  // namespace

TEST(Analytics, VariationParsing) {
  EXPECT_EQ(variation_from_int(1), Variation::kPerCell);
  EXPECT_EQ(variation_from_int(4), Variation::kGlobal);
  EXPECT_THROW(variation_from_int(0), ConfigError);
  EXPECT_THROW(variation_from_int(5), ConfigError);
  EXPECT_EQ(parse_combine_mode("exact"), CombineMode::kExact);
  EXPECT_EQ(parse_combine_mode("paper-pairwise"), CombineMode::kPaperPairwise);
  EXPECT_THROW(parse_combine_mode("pairwise"), ConfigError);
}

TEST(Analytics, ResultGeometryShapes) {
  const auto g = GridGeometry::canonical(5, 8);
  EXPECT_EQ(result_geometry(g, Variation::kPerCell).nlat, 5u);
  EXPECT_EQ(result_geometry(g, Variation::kPerCell).nlon, 8u);
  EXPECT_EQ(result_geometry(g, Variation::kPerLat).nlat, 5u);
  EXPECT_EQ(result_geometry(g, Variation::kPerLat).nlon, 1u);
  EXPECT_EQ(result_geometry(g, Variation::kPerLon).nlat, 1u);
  EXPECT_EQ(result_geometry(g, Variation::kPerLon).nlon, 8u);
  EXPECT_EQ(result_geometry(g, Variation::kGlobal).cells(), 1u);
}

TEST(Analytics, PairwiseOnlyForMean) {
  EXPECT_NO_THROW(build_plan(StatKind::kMean, Variation::kGlobal, "a", CombineMode::kPaperPairwise));
  for (StatKind s : {StatKind::kMin, StatKind::kMax, StatKind::kStddev}) {
    EXPECT_THROW(build_plan(s, Variation::kGlobal, "a", CombineMode::kPaperPairwise), ConfigError);
  }
}

TEST(Analytics, PlanHasOneCombine) {
  for (StatKind s : kStats) {
    for (Variation v : kVariations) {
      const auto root = build_plan(s, v, "a");
      const auto c = combine_node(root);
      ASSERT_NE(c, nullptr);
      EXPECT_EQ(c->op(), PlanOp::kCombine);
      EXPECT_FALSE(apply_tail(root, Element{CellSummaries{}}).has_value());
    }
  }
}

TEST(AnalyticsProperty, ShapeContract) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_geometry(rng);
    Corpus c;
    fill_random(c, rng, g, 1 + static_cast<int>(rng() % 4));
    c.add(GridTensor(0, 0, {gstest::random_field(rng, g, "a", 0.0)}));
    const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
    for (StatKind s : kStats) {
      for (Variation v : kVariations) {
        const auto& f = run_stat(ds, s, v, {"a"}).field(s, "a");
        EXPECT_EQ(f.geometry().nlat, result_geometry(g, v).nlat);
        EXPECT_EQ(f.geometry().nlon, result_geometry(g, v).nlon);
      }
    }
  }
}

TEST(AnalyticsProperty, EngineMatchesIndependentReference) {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = random_geometry(rng);
    Corpus c;
    fill_random(c, rng, g, 1 + static_cast<int>(rng() % 6));
    const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
    for (const char* var : {"a", "b", "c"}) {
      const bool present = std::any_of(c.files.begin(), c.files.end(),
                                       [&](const GridTensor& t) { return t.has(var); });
      for (StatKind s : kStats) {
        for (Variation v : kVariations) {
          if (!present) {
            EXPECT_THROW(run_stat(ds, s, v, {var}), VariableAbsentError);
            continue;
          }
          const auto got = run_stat(ds, s, v, {var});
          const auto ref = gstest::reference_stat(c.files, s, v, var);
          const auto why = gstest::compare(got.field(s, var), ref, s, 1e-9);
          ASSERT_TRUE(why.empty()) << "trial " << trial << " " << var << " " << to_string(s)
                                   << " v" << to_int(v) << ": " << why;
          const auto oracle = oracle_stat(c.files, s, v, var);
          const auto why2 = gstest::compare(oracle.field(s, var), ref, s, 1e-9);
          ASSERT_TRUE(why2.empty()) << "oracle: " << why2;
        }
      }
    }
  }
}

TEST(AnalyticsProperty, ClusterRunMatchesInline) {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 8; ++trial) {
    const auto g = random_geometry(rng);
    Corpus c;
    fill_random(c, rng, g, 2 + static_cast<int>(rng() % 5));
    c.add(GridTensor(0, 0, {gstest::random_field(rng, g, "a", 0.2)}));
    Cluster cluster(small_cluster(), c.store);
    cluster.start();
    const Dataset inline_ds = Dataset::from_blocks(c.store, c.blocks);
    const Dataset cluster_ds = Dataset::from_blocks(c.store, c.blocks, &cluster);
    for (StatKind s : kStats) {
      for (Variation v : kVariations) {
        EXPECT_TRUE(bit_identical(run_stat(inline_ds, s, v, {"a"}).field(s, "a"),
                                  run_stat(cluster_ds, s, v, {"a"}).field(s, "a")));
      }
    }
  }
}

TEST(AnalyticsProperty, VariablesAreIsolated) {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 15; ++trial) {
    const auto g = random_geometry(rng);
    Corpus c;
    for (int i = 0; i < 4; ++i) {
      c.add(GridTensor(0, 6 * i, {gstest::random_field(rng, g, "a", 0.2),
                                  gstest::random_field(rng, g, "b", 0.2)}));
    }
    const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
    for (StatKind s : kStats) {
      for (Variation v : kVariations) {
        const auto both = run_stat(ds, s, v, {"a", "b"});
        EXPECT_TRUE(bit_identical(both.field(s, "a"), run_stat(ds, s, v, {"a"}).field(s, "a")));
        EXPECT_TRUE(bit_identical(both.field(s, "b"), run_stat(ds, s, v, {"b"}).field(s, "b")));
        EXPECT_NE(both.find(s, "a")->lat_axis, both.find(s, "b")->lat_axis);
      }
    }
  }
}

TEST(Analytics, MaskedEverywhereGivesMaskedCells) {
  Corpus c;
  const auto g = GridGeometry::canonical(2, 3);
  c.add(GridTensor(0, 0, {GridField::fully_masked(g, "a")}));
  c.add(GridTensor(0, 6, {GridField::from_values(g, "a", {1, NAN, 3, NAN, 5, 6})}));
  const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
  const GridField mean = run_stat(ds, StatKind::kMean, Variation::kPerCell, {"a"}).field(StatKind::kMean, "a");
  EXPECT_FALSE(mean.valid(1));
  EXPECT_FALSE(mean.valid(3));
  EXPECT_EQ(mean.value(0), 1.0);
  const GridField lat = run_stat(ds, StatKind::kMax, Variation::kPerLat, {"a"}).field(StatKind::kMax, "a");
  EXPECT_EQ(lat.value(0), 3.0);
  EXPECT_EQ(lat.value(1), 6.0);
}

TEST(Analytics, SingleValueHasZeroStddev) {
  Corpus c;
  const auto g = GridGeometry::canonical(1, 1);
  for (int i = 0; i < 3; ++i) c.add(GridTensor(0, 6 * i, {GridField::filled(g, "a", 7.25)}));
  const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
  const auto r = run_stat(ds, StatKind::kStddev, Variation::kGlobal, {"a"});
  EXPECT_EQ(r.field(StatKind::kStddev, "a").value(0), 0.0);
}

TEST(Analytics, PairwiseMeanIsOrderDependentFold) {
  const auto g = GridGeometry::canonical(1, 1);
  const auto run = [&](std::vector<double> values) {
    Corpus c;
    for (std::size_t i = 0; i < values.size(); ++i) {
      c.add(GridTensor(0, 6 * static_cast<int>(i), {GridField::filled(g, "a", values[i])}));
    }
    const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
    return run_stat(ds, StatKind::kMean, Variation::kGlobal, {"a"}, CombineMode::kPaperPairwise)
        .field(StatKind::kMean, "a")
        .value(0);
  };
  EXPECT_EQ(run({4.0}), 4.0);
  EXPECT_EQ(run({0.0, 0.0, 6.0}), 3.0);
  EXPECT_EQ(run({6.0, 0.0, 0.0}), 1.5);
  // Exact mean is 2 either way.
  Corpus c;
  for (double v : {6.0, 0.0, 0.0}) c.add(GridTensor(0, 0, {GridField::filled(g, "a", v)}));
  const Dataset ds = Dataset::from_blocks(c.store, c.blocks);
  EXPECT_EQ(run_stat(ds, StatKind::kMean, Variation::kGlobal, {"a"}).field(StatKind::kMean, "a").value(0), 2.0);
}

TEST(Analytics, DetailedRunReportsJobsAndInvocations) {
  std::mt19937_64 rng(9);
  Corpus c;
    fill_random(c, rng, GridGeometry::canonical(4, 4), 5);
  c.add(GridTensor(0, 0, {gstest::random_field(rng, GridGeometry::canonical(4, 4), "a", 0.1),
                          gstest::random_field(rng, GridGeometry::canonical(4, 4), "b", 0.1)}));
  Cluster cluster(small_cluster(), c.store);
  cluster.start();
  const Dataset ds = Dataset::from_blocks(c.store, c.blocks, &cluster);
  const StatRun r = run_stat_detailed(ds, StatKind::kMean, Variation::kGlobal, {"a", "b"});
  ASSERT_EQ(r.metrics.size(), 2u);
  for (const auto& m : r.metrics) {
    EXPECT_TRUE(m.finished);
    EXPECT_GT(m.tasks_total, 0u);
  }
  EXPECT_GT(r.invocations, 0u);
  EXPECT_EQ(r.result.entries().size(), 2u);
}
