#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "vecflow/engine.hpp"
#include "vecflow/error.hpp"
#include "vecflow/eval.hpp"

namespace vecflow {
namespace {

TopKResult result_of(std::vector<PointId> ids) {
  TopKResult r;
  for (const PointId id : ids) r.hits.push_back({id, 0.0f});
  return r;
}

TEST(Recall, IdenticalIsOne) {
  const GroundTruth gt = {{1, 2, 3}, {4, 5, 6}};
  const std::vector<TopKResult> res = {result_of({1, 2, 3}), result_of({4, 5, 6})};
  EXPECT_DOUBLE_EQ(recall_at_k(res, gt, 3), 1.0);
}

TEST(Recall, DisjointIsZero) {
  const GroundTruth gt = {{1, 2, 3}};
  const std::vector<TopKResult> res = {result_of({7, 8, 9})};
  EXPECT_DOUBLE_EQ(recall_at_k(res, gt, 3), 0.0);
}

TEST(Recall, HalfCorrect) {
  GroundTruth gt;
  std::vector<TopKResult> res;
  for (PointId q = 0; q < 8; ++q) {
    std::vector<PointId> truth, got;
    for (PointId i = 0; i < 10; ++i) {
      truth.push_back(q * 100 + i);
      got.push_back(i < 5 ? q * 100 + i : q * 100 + 50 + i);
    }
    gt.push_back(truth);
    res.push_back(result_of(got));
  }
  EXPECT_DOUBLE_EQ(recall_at_k(res, gt, 10), 0.5);
}

TEST(Recall, OrderDoesNotMatter) {
  std::mt19937 gen(1);
  std::vector<PointId> truth(10);
  std::iota(truth.begin(), truth.end(), 0);
  std::vector<PointId> got = {9, 3, 44, 1, 0, 55, 66, 2, 77, 88};
  const double base = query_recall(got, truth, 10);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(got.begin(), got.end(), gen);
    std::shuffle(truth.begin(), truth.end(), gen);
    EXPECT_DOUBLE_EQ(query_recall(got, truth, 10), base);
  }
  EXPECT_DOUBLE_EQ(base, 0.5);
}

TEST(Recall, PaddedTruthUsesShorterDenominator) {
  const std::vector<PointId> truth = {4, 7, kInvalidPoint, kInvalidPoint};
  EXPECT_DOUBLE_EQ(query_recall(std::vector<PointId>{7, 4}, truth, 4), 1.0);
  EXPECT_DOUBLE_EQ(query_recall(std::vector<PointId>{7}, truth, 4), 0.5);
  const std::vector<PointId> none = {kInvalidPoint, kInvalidPoint};
  EXPECT_DOUBLE_EQ(query_recall(std::vector<PointId>{}, none, 2), 1.0);
}

TEST(Recall, DuplicateResultsCountOnce) {
  const std::vector<PointId> truth = {1, 2};
  EXPECT_DOUBLE_EQ(query_recall(std::vector<PointId>{1, 1}, truth, 2), 0.5);
}

TEST(Recall, CountMismatchIsParameterError) {
  const GroundTruth gt = {{1}, {2}};
  const std::vector<TopKResult> res = {result_of({1})};
  EXPECT_THROW(recall_at_k(res, gt, 1), ParameterError);
}

TEST(Oracle, KAboveMatchCountReturnsAll) {
  const auto data = testing::random_dataset(100, 4, 1);
  std::vector<std::vector<Label>> per_point(100);
  for (int i = 0; i < 7; ++i) per_point[i * 13].push_back(2);
  const LabelAssignment labels(per_point);
  const auto r = brute_force_oracle(data, labels, data.row(0), LabelQuery::single(2), 50);
  EXPECT_EQ(r.size(), 7u);
  EXPECT_TRUE(std::is_sorted(r.hits.begin(), r.hits.end(), hit_less));
  EXPECT_TRUE(brute_force_oracle(data, labels, data.row(0), LabelQuery::single(9), 5).hits.empty());
}

TEST(Oracle, AndOrSemantics) {
  const auto data = testing::random_dataset(2000, 6, 2);
  const auto labels = testing::random_labels(2000, 5, 0.3, 3);
  const auto query = testing::random_dataset(1, 6, 4);
  const std::vector<Label> pair = {1, 3};
  std::vector<PointId> both, either;
  for (PointId i = 0; i < 2000; ++i) {
    if (testing::naive_subset(labels.labels(i), pair)) both.push_back(i);
    if (testing::naive_any(labels.labels(i), pair)) either.push_back(i);
  }
  EXPECT_EQ(brute_force_oracle(data, labels, query.row(0), LabelQuery::all_of(pair), 15).hits,
            testing::naive_topk(data, query.row(0), both, 15));
  EXPECT_EQ(brute_force_oracle(data, labels, query.row(0), LabelQuery::any_of(pair), 15).hits,
            testing::naive_topk(data, query.row(0), either, 15));
}

TEST(Oracle, AgreesWithScanIndex) {
  const auto data = testing::random_dataset(3000, 20, 5);
  const auto labels = testing::random_labels(3000, 8, 0.1, 6);
  EngineConfig cfg;
  cfg.threshold = kUnboundedThreshold;
  const auto index = VecFlowIndex::build(data, labels, cfg);
  const auto queries = testing::random_dataset(100, 20, 7);
  for (std::size_t q = 0; q < 100; ++q) {
    const auto lq = LabelQuery::single(static_cast<Label>(q % 8));
    EXPECT_EQ(brute_force_oracle(data, labels, queries.row(q), lq, 10).hits,
              bfs_search(index.ls(), queries.row(q), lq.labels[0], 10).hits);
  }
}

TEST(GroundTruth, ThreadedMatchesSerial) {
  const auto data = testing::random_dataset(1500, 8, 8);
  const auto labels = testing::random_labels(1500, 6, 0.2, 9);
  const auto queries = testing::random_dataset(60, 8, 10);
  std::vector<LabelQuery> ql;
  for (std::size_t q = 0; q < 60; ++q) ql.push_back(LabelQuery::single(q % 7));  // 6 is absent
  const auto serial = compute_ground_truth(data, labels, queries, ql, 10, Metric::kL2, 1);
  EXPECT_EQ(compute_ground_truth(data, labels, queries, ql, 10, Metric::kL2, 4), serial);
  EXPECT_EQ(serial[6], std::vector<PointId>(10, kInvalidPoint));
}

class BenchFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = testing::random_dataset(3000, 8, 1);
    labels_ = testing::random_labels(3000, 4, 0.3, 2);
    queries_ = testing::random_dataset(50, 8, 3);
    for (std::size_t q = 0; q < 50; ++q) qlabels_.push_back(LabelQuery::single(q % 4));
    truth_ = compute_ground_truth(data_, labels_, queries_, qlabels_, 10);
  }

  VectorDataset data_;
  LabelAssignment labels_;
  VectorDataset queries_;
  std::vector<LabelQuery> qlabels_;
  GroundTruth truth_;
};

TEST_F(BenchFixture, OneRowPerGridPoint) {
  EngineConfig cfg;
  cfg.threshold = 500;
  const auto index = VecFlowIndex::build(data_, labels_, cfg);
  const std::vector<std::size_t> grid = {32, 64, 128};
  BenchOptions opts;
  opts.repetitions = 1;
  const auto report = bench_sweep(index, queries_, qlabels_, truth_, grid, opts);
  ASSERT_EQ(report.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(report.rows[i].itopk, grid[i]);
    EXPECT_EQ(report.rows[i].threshold, 500u);
    EXPECT_GT(report.rows[i].qps, 0.0);
    EXPECT_GE(report.rows[i].recall, 0.0);
    EXPECT_LE(report.rows[i].recall, 1.0);
  }
  const auto csv = report.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "T,itopk,k,streaming,workers,recall,qps,mean_latency_s");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST_F(BenchFixture, EmptyGridIsEmptyReport) {
  const auto index = VecFlowIndex::build(data_, labels_);
  EXPECT_TRUE(bench_sweep(index, queries_, qlabels_, truth_, {}, {}).rows.empty());
}

TEST_F(BenchFixture, StreamingRecallMatchesBatch) {
  EngineConfig cfg;
  cfg.threshold = 500;
  const auto index = VecFlowIndex::build(data_, labels_, cfg);
  const std::vector<std::size_t> grid = {16, 64};
  BenchOptions batch;
  batch.repetitions = 1;
  BenchOptions stream = batch;
  stream.streaming = true;
  stream.workers = 3;
  const auto a = bench_sweep(index, queries_, qlabels_, truth_, grid, batch);
  const auto b = bench_sweep(index, queries_, qlabels_, truth_, grid, stream);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(a.rows[i].recall, b.rows[i].recall);
  EXPECT_TRUE(b.rows[0].streaming);
}

TEST_F(BenchFixture, ThresholdSweepLabelsRows) {
  const std::vector<std::uint64_t> ts = {0, 500, kUnboundedThreshold};
  const std::vector<std::size_t> grid = {32};
  BenchOptions opts;
  opts.repetitions = 1;
  const auto report = threshold_sweep(data_, labels_, {}, ts, queries_, qlabels_, truth_, grid, opts);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[2].threshold, kUnboundedThreshold);
  EXPECT_DOUBLE_EQ(report.rows[2].recall, 1.0);  // scan only
  EXPECT_NE(report.to_csv().find("\ninf,32,"), std::string::npos);
}

TEST(BestQps, PerThresholdMaximum) {
  BenchReport r;
  r.rows = {{0, 16, 10, false, 1, 0.80, 900, 0},
            {0, 64, 10, false, 1, 0.95, 500, 0},
            {7, 16, 10, false, 1, 0.92, 700, 0},
            {7, 64, 10, false, 1, 0.99, 300, 0},
            {9, 16, 10, false, 1, 0.50, 999, 0}};
  const auto best = best_qps_by_threshold(r, 0.9);
  ASSERT_EQ(best.size(), 3u);
  EXPECT_EQ(best[0], (std::pair<std::uint64_t, double>{0, 500}));
  EXPECT_EQ(best[1], (std::pair<std::uint64_t, double>{7, 700}));
  EXPECT_EQ(best[2], (std::pair<std::uint64_t, double>{9, 0}));
}

TEST(FormatResults, FixedLayout) {
  std::vector<TopKResult> res(2);
  res[0].hits = {{3, 0.5f}, {8, 1.25f}};
  res[1].hits = {{1, 0.1f}};
  EXPECT_EQ(format_results(res),
            "query,rank,id,distance\n0,0,3,0.5\n0,1,8,1.25\n1,0,1,0.100000001\n");
  EXPECT_EQ(format_threshold(kUnboundedThreshold), "inf");
  EXPECT_EQ(format_threshold(2000), "2000");
}

}  // namespace
}  // namespace vecflow
