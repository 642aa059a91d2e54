// Serial reference vs OpenMP kernels over an index of N rows, D = 768.

#include <random>

#include <benchmark/benchmark.h>

#include "shotlocker/kernels.hpp"
#include "shotlocker/retrieval.hpp"

using namespace shotlocker;

namespace {

constexpr std::size_t kDim = 768;

EmbeddingMatrix make_rows(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> normal;
  std::vector<double> values(n * kDim);
  for (auto& v : values) v = normal(rng);
  return EmbeddingMatrix::with_sequential_ids(kDim, std::move(values));
}

std::vector<double> make_query() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> q(kDim);
  for (auto& v : q) v = normal(rng);
  return q;
}

template <auto Fn>
void BM_Distances(benchmark::State& state) {
  const auto rows = make_rows(static_cast<std::size_t>(state.range(0)));
  const auto query = make_query();
  std::vector<double> out(rows.rows());
  for (auto _ : state) {
    Fn(MeasureKind::cosine, query, rows, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_ColumnMoments(benchmark::State& state) {
  const auto rows = make_rows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_PrepareRows(benchmark::State& state) {
  const auto rows = make_rows(static_cast<std::size_t>(state.range(0)));
  const auto moments = kernels::serial::column_moments(rows);
  const Standardizer s(moments.mean, moments.std);
  const Measure m{MeasureKind::cosine, true, true};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(m, &s, rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RankPrepared(benchmark::State& state) {
  const auto rows = make_rows(static_cast<std::size_t>(state.range(0)));
  std::unordered_map<RecordId, std::size_t> label_of;
  for (auto id : rows.ids()) label_of[id] = id % 4;
  const PreparedIndex index(rows, LabelIndex({"a", "b", "c", "d"}, label_of), {MeasureKind::cosine, false, false});
  const auto query = make_query();
  for (auto _ : state) benchmark::DoNotOptimize(index.rank(query));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Distances<kernels::serial::distances>)->Name("distances/serial")->Arg(1000)->Arg(20000);
BENCHMARK(BM_Distances<kernels::omp::distances>)->Name("distances/omp")->Arg(1000)->Arg(20000);
BENCHMARK(BM_ColumnMoments<kernels::serial::column_moments>)->Name("column_moments/serial")->Arg(1000)->Arg(20000);
BENCHMARK(BM_ColumnMoments<kernels::omp::column_moments>)->Name("column_moments/omp")->Arg(1000)->Arg(20000);
BENCHMARK(BM_PrepareRows<kernels::serial::prepare_rows>)->Name("prepare_rows/serial")->Arg(1000)->Arg(20000);
BENCHMARK(BM_PrepareRows<kernels::omp::prepare_rows>)->Name("prepare_rows/omp")->Arg(1000)->Arg(20000);
BENCHMARK(BM_RankPrepared)->Name("rank/prepared")->Arg(1000)->Arg(20000);

BENCHMARK_MAIN();
