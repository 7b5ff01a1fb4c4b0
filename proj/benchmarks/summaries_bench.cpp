#include <benchmark/benchmark.h>

#include "gridstream/generator.hpp"
#include "gridstream/summaries.hpp"

using namespace gridstream;

namespace {

GridField field(std::uint32_t nlat, int tau) {
  GeneratorSpec spec;
  spec.seed = 2;
  spec.geometry = GridGeometry::canonical(nlat, 2 * nlat);
  spec.missing_fraction = 0.1;
  return generate_field(spec, 0, tau, "gst");
}

void BM_Accumulate(benchmark::State& state) {
  const auto f = field(static_cast<std::uint32_t>(state.range(0)), 24);
  const auto base = accumulate(CellSummaries::identity(), field(static_cast<std::uint32_t>(state.range(0)), 48));
  for (auto _ : state) {
    auto s = accumulate(base, f);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.size()));
}
BENCHMARK(BM_Accumulate)->Arg(46)->Arg(361);

void BM_Merge(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const auto a = accumulate(CellSummaries::identity(), field(n, 24));
  const auto b = accumulate(CellSummaries::identity(), field(n, 48));
  for (auto _ : state) {
    auto s = merge(a, b);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * a.size()));
}
BENCHMARK(BM_Merge)->Arg(46)->Arg(361);

void BM_FinalizeStddev(benchmark::State& state) {
  const auto s = accumulate(CellSummaries::identity(), field(static_cast<std::uint32_t>(state.range(0)), 24));
  for (auto _ : state) {
    auto f = finalize(s, StatKind::kStddev);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_FinalizeStddev)->Arg(46)->Arg(361);

void BM_ReduceLon(benchmark::State& state) {
  const auto s = accumulate(CellSummaries::identity(), field(static_cast<std::uint32_t>(state.range(0)), 24));
  for (auto _ : state) {
    auto r = reduce_axis(s, Axis::kLon);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ReduceLon)->Arg(46)->Arg(361);

}  // namespace
