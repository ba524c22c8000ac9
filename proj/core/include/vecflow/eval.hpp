#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vecflow/dataset_io.hpp"
#include "vecflow/engine.hpp"
#include "vecflow/multilabel.hpp"
#include "vecflow/types.hpp"

namespace vecflow {

// Exact filtered top-k by full scan. AND keeps points carrying every query
// label, OR points carrying at least one. Canonical (distance, id) order.
TopKResult brute_force_oracle(const VectorDataset& dataset, const LabelAssignment& labels,
                              std::span<const float> query, const LabelQuery& query_labels,
                              std::size_t k, Metric metric = Metric::kL2);

// Oracle answers for every query, padded to k with kInvalidPoint.
GroundTruth compute_ground_truth(const VectorDataset& dataset, const LabelAssignment& labels,
                                 const VectorDataset& queries,
                                 std::span<const LabelQuery> query_labels, std::size_t k,
                                 Metric metric = Metric::kL2, std::size_t threads = 1);

// |result ∩ gt| / min(k, |gt|) over the first k entries of each side;
// kInvalidPoint entries in gt are ignored. An empty gt scores 1.
double query_recall(std::span<const PointId> result, std::span<const PointId> truth,
                    std::size_t k);

// Mean of query_recall across queries.
double recall_at_k(std::span<const TopKResult> results, const GroundTruth& truth, std::size_t k);

struct BenchRow {
  std::uint64_t threshold = 0;
  std::size_t itopk = 0;
  std::size_t k = 0;
  bool streaming = false;
  std::size_t workers = 1;
  double recall = 0;
  double qps = 0;
  double mean_latency = 0;  // seconds per batch; a streaming batch is one query
};

struct BenchReport {
  std::vector<BenchRow> rows;

  std::string to_csv() const;
};

struct BenchOptions {
  std::size_t k = 10;
  bool streaming = false;
  std::size_t workers = 1;
  std::size_t repetitions = 3;
  std::uint64_t seed = 0;
  std::size_t max_iterations = SearchParams{}.max_iterations;
};

// One row per itopk value. Queries run as one batch (or as a stream of
// single-query jobs); QPS is the median over the timed repetitions after
// one warm-up pass.
BenchReport bench_sweep(const VecFlowIndex& index, const VectorDataset& queries,
                        std::span<const LabelQuery> query_labels, const GroundTruth& truth,
                        std::span<const std::size_t> itopk_grid, const BenchOptions& options);

// Rebuilds the index for each threshold and appends its sweep rows.
BenchReport threshold_sweep(const VectorDataset& dataset, const LabelAssignment& labels,
                            const EngineConfig& base, std::span<const std::uint64_t> thresholds,
                            const VectorDataset& queries, std::span<const LabelQuery> query_labels,
                            const GroundTruth& truth, std::span<const std::size_t> itopk_grid,
                            const BenchOptions& options);

// Best QPS among rows with recall ≥ min_recall, per threshold, in input
// order. Thresholds with no qualifying row report 0.
std::vector<std::pair<std::uint64_t, double>> best_qps_by_threshold(const BenchReport& report,
                                                                    double min_recall);

// "query,rank,id,distance" lines with full float precision; stable across
// runs with the same inputs.
std::string format_results(std::span<const TopKResult> results);

std::string format_threshold(std::uint64_t threshold);

}  // namespace vecflow
