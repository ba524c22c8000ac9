#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "vecflow/dataset_io.hpp"
#include "vecflow/distance.hpp"
#include "vecflow/engine.hpp"
#include "vecflow/executor.hpp"
#include "vecflow/rng.hpp"

namespace {

using namespace vecflow;

VectorDataset synthetic(std::size_t n, std::size_t dim, std::uint64_t seed) {
  SyntheticVectorOptions opts;
  opts.n_points = n;
  opts.dim = dim;
  opts.seed = seed;
  return gen_synthetic_vectors(opts);
}

// One label on every point, built once per (size, threshold) pair.
struct SingleLabel {
  VectorDataset queries;
  VecFlowIndex index;
};

const SingleLabel& single_label(std::size_t n, std::uint64_t threshold) {
  static std::map<std::pair<std::size_t, std::uint64_t>, std::unique_ptr<SingleLabel>> cache;
  auto& slot = cache[{n, threshold}];
  if (!slot) {
    slot = std::make_unique<SingleLabel>();
    slot->queries = synthetic(256, 32, 2);
    EngineConfig cfg;
    cfg.threshold = threshold;
    slot->index = VecFlowIndex::build(synthetic(n, 32, 1),
                                      LabelAssignment(std::vector<std::vector<Label>>(n, {0})), cfg);
  }
  return *slot;
}

void BM_Distance(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto v = synthetic(2, dim, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(distance(Metric::kL2, v.row(0), v.row(1)));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Distance)->Arg(32)->Arg(128)->Arg(960);

void BM_GraphSearch(benchmark::State& state) {
  const auto& s = single_label(static_cast<std::size_t>(state.range(0)), 0);
  SearchParams p;
  p.itopk = static_cast<std::size_t>(state.range(1));
  std::uint64_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.index.search(s.queries.row(q % 256), Label{0}, p, q));
    ++q;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GraphSearch)->Args({2000, 32})->Args({20000, 32})->Args({20000, 128});

void BM_ScanSearch(benchmark::State& state) {
  const auto& s = single_label(static_cast<std::size_t>(state.range(0)), kUnboundedThreshold);
  std::uint64_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.index.search(s.queries.row(q % 256), Label{0}, {}, q));
    ++q;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScanSearch)->Arg(100)->Arg(1000)->Arg(10000);

void BM_Verify(benchmark::State& state) {
  ZipfLabelOptions lo;
  lo.n_points = 10000;
  lo.n_labels = 200;
  lo.target_mean = 10.8;
  const auto table = build_predicate_table(gen_zipf_labels(lo));
  CounterRng rng(4);
  std::vector<std::pair<PointId, std::vector<Label>>> cases;
  for (int i = 0; i < 1024; ++i) {
    const auto p = static_cast<PointId>(rng.below(10000));
    const auto own = table.labels_of(p);
    std::vector<Label> q = {own.front(), own.back()};
    if (own.size() > 2) q.insert(q.begin() + 1, own[own.size() / 2]);
    cases.emplace_back(p, std::move(q));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [p, q] = cases[i++ % cases.size()];
    benchmark::DoNotOptimize(verify(table, p, q));
  }
}
BENCHMARK(BM_Verify);

// Round trip of a trivial job, isolating queueing overhead.
void BM_ExecutorRoundTrip(benchmark::State& state) {
  Executor ex([](const Job& job) {
    TopKResult r;
    r.hits.push_back({static_cast<PointId>(job.query_ordinal), 0.0f});
    return r;
  }, ExecutorOptions{1, 4, 256});
  Job job;
  job.labels = LabelQuery::single(0);
  for (auto _ : state) {
    auto t = ex.submit(job);
    benchmark::DoNotOptimize(ex.await(t));
  }
}
BENCHMARK(BM_ExecutorRoundTrip);

void BM_DispatchPerBatchRoundTrip(benchmark::State& state) {
  const JobHandler handler = [](const Job&) { return TopKResult{}; };
  const std::vector<Job> jobs(1);
  for (auto _ : state) benchmark::DoNotOptimize(run_dispatch_per_batch(handler, jobs, 1, 1));
}
BENCHMARK(BM_DispatchPerBatchRoundTrip);

}  // namespace

BENCHMARK_MAIN();
