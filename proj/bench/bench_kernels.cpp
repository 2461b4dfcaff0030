#include <benchmark/benchmark.h>

#include "poslab/complexity.hpp"
#include "poslab/datagen.hpp"
#include "poslab/dictionary.hpp"
#include "poslab/projector.hpp"

using namespace poslab;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

SyntheticSpec union_spec(std::size_t count) {
  SyntheticSpec spec{32, {}, 0.05, 1};
  for (std::uint64_t c = 0; c < 4; ++c) spec.components.push_back({gaussian(32, 3, 10 + c), count});
  return spec;
}

const Dictionary& dictionary() {
  static const Dictionary d(gaussian(16, 24, 2));
  return d;
}

const UnionProjector& projector() {
  static const UnionProjector p = [] {
    std::vector<Matrix> bases;
    for (std::uint64_t c = 0; c < 8; ++c) bases.push_back(orthonormal_basis(gaussian(32, 4, 20 + c)));
    return UnionProjector(bases);
  }();
  return p;
}

}  // namespace

static void BM_ric_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::ric(dictionary(), st.range(0)));
}
static void BM_ric_omp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(ric(dictionary(), st.range(0)));
}
BENCHMARK(BM_ric_serial)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ric_omp)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_cover_serial(benchmark::State& st) {
  const Dataset pts = gen_circle(st.range(0), 0.0, 3);
  for (auto _ : st) benchmark::DoNotOptimize(serial::cover_centers(pts, 0.1));
}
static void BM_cover_omp(benchmark::State& st) {
  const Dataset pts = gen_circle(st.range(0), 0.0, 3);
  for (auto _ : st) benchmark::DoNotOptimize(cover_centers(pts, 0.1));
}
BENCHMARK(BM_cover_serial)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cover_omp)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_project_serial(benchmark::State& st) {
  const Dataset d = gen_union(union_spec(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::project_batch(projector(), d.samples));
}
static void BM_project_omp(benchmark::State& st) {
  const Dataset d = gen_union(union_spec(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(project_batch(projector(), d.samples));
}
BENCHMARK(BM_project_serial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_project_omp)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_gen_serial(benchmark::State& st) {
  const SyntheticSpec spec = union_spec(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(serial::gen_union(spec));
}
static void BM_gen_omp(benchmark::State& st) {
  const SyntheticSpec spec = union_spec(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(gen_union(spec));
}
BENCHMARK(BM_gen_serial)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gen_omp)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
