#include "vecflow/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <thread>
#include <unordered_set>

#include "vecflow/distance.hpp"
#include "vecflow/error.hpp"
#include "vecflow/executor.hpp"

namespace vecflow {

namespace {

bool matches(std::span<const Label> point_labels, const LabelQuery& q) {
  if (q.op == LabelOp::kAnd) {
    return std::includes(point_labels.begin(), point_labels.end(), q.labels.begin(),
                         q.labels.end());
  }
  for (const Label l : q.labels) {
    if (std::binary_search(point_labels.begin(), point_labels.end(), l)) return true;
  }
  return false;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

TopKResult brute_force_oracle(const VectorDataset& dataset, const LabelAssignment& labels,
                              std::span<const float> query, const LabelQuery& query_labels,
                              std::size_t k, Metric metric) {
  if (dataset.n_points() != labels.n_points()) {
    throw ParameterError("oracle dataset and labels disagree on the point count");
  }
  if (query.size() != dataset.dim()) throw ParameterError("oracle query dimension mismatch");
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < dataset.n_points(); ++i) {
    if (!matches(labels.labels(i), query_labels)) continue;
    hits.push_back({static_cast<PointId>(i), distance(metric, query, dataset.row(i))});
  }
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    hit_less);
  hits.resize(keep);
  TopKResult out;
  out.hits = std::move(hits);
  return out;
}

GroundTruth compute_ground_truth(const VectorDataset& dataset, const LabelAssignment& labels,
                                 const VectorDataset& queries,
                                 std::span<const LabelQuery> query_labels, std::size_t k,
                                 Metric metric, std::size_t threads) {
  if (queries.n_points() != query_labels.size()) {
    throw ParameterError(std::to_string(queries.n_points()) + " queries but " +
                         std::to_string(query_labels.size()) + " label expressions");
  }
  GroundTruth gt(queries.n_points());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t q = first; q < gt.size(); q += stride) {
      gt[q] = brute_force_oracle(dataset, labels, queries.row(q), query_labels[q], k, metric).ids();
    }
  };
  threads = std::max<std::size_t>(1, threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return pad_ground_truth(std::move(gt), k);
}

double query_recall(std::span<const PointId> result, std::span<const PointId> truth,
                    std::size_t k) {
  std::unordered_set<PointId> expected;
  for (std::size_t i = 0; i < truth.size() && expected.size() < k; ++i) {
    if (truth[i] != kInvalidPoint) expected.insert(truth[i]);
  }
  if (expected.empty()) return 1.0;
  std::size_t found = 0;
  std::unordered_set<PointId> counted;
  for (std::size_t i = 0; i < result.size() && i < k; ++i) {
    if (expected.contains(result[i]) && counted.insert(result[i]).second) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(expected.size());
}

double recall_at_k(std::span<const TopKResult> results, const GroundTruth& truth, std::size_t k) {
  if (results.size() != truth.size()) {
    throw ParameterError("recall needs one ground-truth list per query (" +
                         std::to_string(results.size()) + " results, " +
                         std::to_string(truth.size()) + " ground-truth lists)");
  }
  if (results.empty()) return 0.0;
  double sum = 0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    sum += query_recall(results[q].ids(), truth[q], k);
  }
  return sum / static_cast<double>(results.size());
}

std::string format_threshold(std::uint64_t threshold) {
  return threshold == kUnboundedThreshold ? "inf" : std::to_string(threshold);
}

std::string BenchReport::to_csv() const {
  std::string out = "T,itopk,k,streaming,workers,recall,qps,mean_latency_s\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%d,%zu,%.6f,%.3f,%.9f\n",
                  format_threshold(r.threshold).c_str(), r.itopk, r.k, r.streaming ? 1 : 0,
                  r.workers, r.recall, r.qps, r.mean_latency);
    out += buf;
  }
  return out;
}

BenchReport bench_sweep(const VecFlowIndex& index, const VectorDataset& queries,
                        std::span<const LabelQuery> query_labels, const GroundTruth& truth,
                        std::span<const std::size_t> itopk_grid, const BenchOptions& options) {
  const std::size_t nq = queries.n_points();
  if (nq != query_labels.size() || nq != truth.size()) {
    throw ParameterError("queries, query labels and ground truth must have equal counts");
  }
  if (options.repetitions == 0 || options.workers == 0) {
    throw ParameterError("bench needs at least one repetition and one worker");
  }
  BenchReport report;
  if (itopk_grid.empty() || nq == 0) return report;

  const JobHandler handler = make_index_handler(index);
  std::unique_ptr<Executor> executor;
  if (options.streaming) {
    executor = std::make_unique<Executor>(handler, ExecutorOptions{options.workers, 0, 256});
  }

  for (const std::size_t itopk : itopk_grid) {
    SearchParams params;
    params.itopk = itopk;
    params.k = options.k;
    params.max_iterations = options.max_iterations;
    params.rng_seed = options.seed;
    params.validate();

    std::vector<Job> jobs(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      const auto row = queries.row(q);
      jobs[q] = {{row.begin(), row.end()}, query_labels[q], params, q};
    }

    std::vector<TopKResult> results;
    auto run_once = [&] {
      if (options.streaming) {
        std::vector<JobTicket> tickets;
        tickets.reserve(nq);
        for (const auto& job : jobs) tickets.push_back(executor->submit(job));
        results.assign(nq, {});
        for (std::size_t q = 0; q < nq; ++q) results[q] = executor->await(tickets[q]);
      } else if (options.workers == 1) {
        results.assign(nq, {});
        for (std::size_t q = 0; q < nq; ++q) results[q] = handler(jobs[q]);
      } else {
        results = run_dispatch_per_batch(handler, jobs, nq, options.workers);
      }
    };

    run_once();  // warm-up; its results feed the recall column
    const double recall = recall_at_k(results, truth, options.k);
    std::vector<double> walls;
    for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
      const auto start = Clock::now();
      run_once();
      walls.push_back(seconds_since(start));
    }
    const double wall = std::max(median(walls), 1e-9);
    const double batches = options.streaming ? static_cast<double>(nq) : 1.0;

    BenchRow row;
    row.threshold = index.config().threshold;
    row.itopk = itopk;
    row.k = options.k;
    row.streaming = options.streaming;
    row.workers = options.workers;
    row.recall = recall;
    row.qps = static_cast<double>(nq) / wall;
    row.mean_latency = wall / batches;
    report.rows.push_back(row);
  }
  return report;
}

BenchReport threshold_sweep(const VectorDataset& dataset, const LabelAssignment& labels,
                            const EngineConfig& base, std::span<const std::uint64_t> thresholds,
                            const VectorDataset& queries, std::span<const LabelQuery> query_labels,
                            const GroundTruth& truth, std::span<const std::size_t> itopk_grid,
                            const BenchOptions& options) {
  BenchReport report;
  for (const std::uint64_t t : thresholds) {
    EngineConfig config = base;
    config.threshold = t;
    const auto index = VecFlowIndex::build(dataset, labels, config);
    auto part = bench_sweep(index, queries, query_labels, truth, itopk_grid, options);
    report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
  }
  return report;
}

std::vector<std::pair<std::uint64_t, double>> best_qps_by_threshold(const BenchReport& report,
                                                                    double min_recall) {
  std::vector<std::pair<std::uint64_t, double>> best;
  for (const auto& row : report.rows) {
    auto it = std::find_if(best.begin(), best.end(),
                           [&](const auto& e) { return e.first == row.threshold; });
    if (it == best.end()) {
      best.emplace_back(row.threshold, 0.0);
      it = best.end() - 1;
    }
    if (row.recall >= min_recall) it->second = std::max(it->second, row.qps);
  }
  return best;
}

std::string format_results(std::span<const TopKResult> results) {
  std::string out = "query,rank,id,distance\n";
  char buf[96];
  for (std::size_t q = 0; q < results.size(); ++q) {
    for (std::size_t r = 0; r < results[q].hits.size(); ++r) {
      const Hit& h = results[q].hits[r];
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%u,%.9g\n", q, r, h.id,
                    static_cast<double>(h.distance));
      out += buf;
    }
  }
  return out;
}

}  // namespace vecflow
