#include <benchmark/benchmark.h>

#include "gridstream/generator.hpp"
#include "gridstream/sgf.hpp"

using namespace gridstream;

namespace {

GridTensor tensor(std::uint32_t nlat, std::uint32_t nlon, int vars) {
  GeneratorSpec spec;
  spec.seed = 1;
  spec.geometry = GridGeometry::canonical(nlat, nlon);
  spec.missing_fraction = 0.1;
  std::vector<GridField> fields;
  for (int v = 0; v < vars; ++v) fields.push_back(generate_field(spec, 0, 24, spec.variables[v]));
  return GridTensor(spec.first_cycle, 24, std::move(fields));
}

void BM_WriteSgf(benchmark::State& state) {
  const auto t = tensor(static_cast<std::uint32_t>(state.range(0)), static_cast<std::uint32_t>(2 * state.range(0)), 4);
  std::size_t bytes = 0;
  for (auto _ : state) {
    const Bytes b = write_sgf(t);
    bytes = b.size();
    benchmark::DoNotOptimize(b.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_WriteSgf)->Arg(46)->Arg(181)->Arg(361);

void BM_ParseSgf(benchmark::State& state) {
  const Bytes b = write_sgf(tensor(static_cast<std::uint32_t>(state.range(0)), static_cast<std::uint32_t>(2 * state.range(0)), 4));
  for (auto _ : state) {
    GridTensor t = parse_sgf(b);
    benchmark::DoNotOptimize(t);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * b.size()));
}
BENCHMARK(BM_ParseSgf)->Arg(46)->Arg(181)->Arg(361);

}  // namespace
