#include <benchmark/benchmark.h>

#include "gfflab/gfflab.hpp"

using namespace gfflab;

static void BM_DirectFactorize(benchmark::State &state) {
  const WeightedGraph g = build_box_lattice(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(GaussianFieldSampler(g));
  state.SetLabel(std::to_string(g.n_free()) + " unknowns");
}
BENCHMARK(BM_DirectFactorize)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_DirectDraw(benchmark::State &state) {
  const WeightedGraph g = build_box_lattice(2, static_cast<std::size_t>(state.range(0)));
  const GaussianFieldSampler s(g);
  Rng rng(1);
  FieldFunction f(g.n_vertices());
  for (auto _ : state) {
    s.draw_into(rng, f);
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.n_free()));
}
BENCHMARK(BM_DirectDraw)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_TorusFft(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_torus_fft(n, n, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_TorusFft)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_GreensWalk(benchmark::State &state) {
  const WeightedGraph g = build_box_lattice(2, 3);
  const auto walks = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(greens_by_walk(g, 24, 17, walks, seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GreensWalk)->Arg(4096)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_WickMoment(benchmark::State &state) {
  const GreensMatrix G = greens_matrix(build_box_lattice(2, 3));
  std::vector<std::size_t> idx(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = (3 * i) % G.vertices.size();
  for (auto _ : state)
    benchmark::DoNotOptimize(wick_moment(G.values, idx).value);
  state.SetLabel(std::to_string(matching_count(idx.size())) + " matchings");
}
BENCHMARK(BM_WickMoment)->Arg(4)->Arg(8)->Arg(12);

static void BM_DiscAverageMap(benchmark::State &state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const GridShape shape{side, side};
  const FieldSample f = sample_dgff_direct(build_box_lattice(2, side / 2), 1);
  const GridField field(shape, f.values);
  const double t = default_thick_t(shape);
  for (auto _ : state)
    benchmark::DoNotOptimize(disc_average_map(field, t));
}
BENCHMARK(BM_DiscAverageMap)->Arg(129)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
