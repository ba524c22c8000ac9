#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "test_support.hpp"
#include "vecflow/error.hpp"
#include "vecflow/ls_bfs.hpp"

namespace vecflow {
namespace {

std::vector<std::uint8_t> as_bytes(const std::vector<float>& v) {
  std::vector<std::uint8_t> out(v.size() * 4);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

struct SingleLabel {
  VectorDataset data;
  PostingLists posting;
  LSIndex ls;
};

SingleLabel single_label_index(VectorDataset data, Metric metric = Metric::kL2) {
  SingleLabel out;
  out.data = std::move(data);
  std::vector<std::vector<Label>> per_point(out.data.n_points(), std::vector<Label>{4});
  out.posting = build_posting_lists(LabelAssignment(std::move(per_point)));
  LSBuildOptions opts;
  opts.metric = metric;
  out.ls = build_ls_index(out.data, out.posting,
                          partition_labels(out.posting, kUnboundedThreshold), opts);
  return out;
}

std::vector<PointId> all_ids(std::size_t n) {
  std::vector<PointId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

TEST(Layout, ChunkElemsForFloat32) { EXPECT_EQ(default_chunk_elems<float>(), 4u); }

TEST(Layout, GoldenThirtyThreeByEight) {
  // x[i][d] = 8i + d.
  std::vector<float> x(33 * 8);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i);
  const auto out = interleave_layout<float>(x, 8, 32, 4);

  // Group 0: every vector's first chunk, then every vector's second chunk.
  // Group 1: vector 32 alone, 31 zero slots after each of its chunks.
  std::vector<float> golden;
  for (int half = 0; half < 2; ++half) {
    for (int v = 0; v < 32; ++v) {
      for (int e = 0; e < 4; ++e) golden.push_back(static_cast<float>(8 * v + 4 * half + e));
    }
  }
  for (int half = 0; half < 2; ++half) {
    for (int e = 0; e < 4; ++e) golden.push_back(static_cast<float>(256 + 4 * half + e));
    for (int pad = 0; pad < 31 * 4; ++pad) golden.push_back(0.0f);
  }
  ASSERT_EQ(out.size(), 512u);
  EXPECT_EQ(as_bytes(out), as_bytes(golden));

  // Spot checks on raw positions.
  EXPECT_EQ(out[4], 8.0f);     // v1[0] right after v0[0:4)
  EXPECT_EQ(out[128], 4.0f);   // v0[4] opens the second chunk column
  EXPECT_EQ(out[256], 256.0f); // v32[0] opens group 1
  EXPECT_EQ(out[384], 260.0f);
}

TEST(Layout, WidthOneIsRowMajor) {
  const auto data = testing::random_dataset(9, 8, 3);
  EXPECT_EQ(interleave_layout<float>(data.data(), 8, 1, 4), data.data());
}

TEST(Layout, PartialChunkIsZeroPadded) {
  const std::vector<float> x = {1, 2, 3, 4, 5};
  const auto out = interleave_layout<float>(x, 5, 2, 4);
  EXPECT_EQ(out, (std::vector<float>{1, 2, 3, 4, 0, 0, 0, 0, 5, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(Layout, InverseOnRandomShapes) {
  std::mt19937 gen(77);
  std::uniform_int_distribution<std::size_t> m_dist(1, 200), d_dist(1, 40);
  std::uniform_int_distribution<std::size_t> w_dist(1, 64), c_dist(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = m_dist(gen), d = d_dist(gen), w = w_dist(gen), c = c_dist(gen);
    const auto x = testing::random_dataset(m, d, trial).data();
    const auto blocks = interleave_layout<float>(x, d, w, c);
    EXPECT_EQ(blocks.size(), (m + w - 1) / w * w * round_up(d, c));
    EXPECT_EQ(deinterleave_layout<float>(blocks, m, d, w, c), x)
        << "m=" << m << " d=" << d << " W=" << w << " c=" << c;
  }
}

TEST(Layout, SeventyByThirteen) {
  const auto x = testing::random_dataset(70, 13, 1).data();
  EXPECT_EQ(deinterleave_layout<float>(interleave_layout<float>(x, 13, 32, 4), 70, 13, 32, 4), x);
}

TEST(LsIndex, SinglePointPadsGroup) {
  const auto idx = single_label_index(testing::random_dataset(1, 8, 1));
  EXPECT_EQ(idx.ls.total_slots(), 32u);
  EXPECT_EQ(idx.ls.index_mapping[0], 0u);
  for (std::size_t s = 1; s < 32; ++s) EXPECT_EQ(idx.ls.index_mapping[s], kInvalidPoint);
  EXPECT_EQ(idx.ls.blocks.size(), 32u * 8);
}

TEST(LsIndex, SlotAccounting) {
  const auto data = testing::random_dataset(700, 10, 2);
  const auto labels = testing::random_labels(700, 9, 0.15, 3);
  const auto posting = build_posting_lists(labels);
  const auto ls = build_ls_index(data, posting, partition_labels(posting, kUnboundedThreshold), {});
  std::size_t slots = 0;
  for (const auto& [l, list] : posting.lists()) slots += (list.size() + 31) / 32 * 32;
  EXPECT_EQ(ls.total_slots(), slots);
  EXPECT_EQ(ls.vector_bytes(), slots * round_up(10, 4) * 4);
  EXPECT_EQ(ls.mapping_bytes(), slots * 4);
  for (const auto& [l, list] : posting.lists()) {
    const auto extracted = ls.extract(l);
    ASSERT_EQ(extracted.size(), list.size() * 10);
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_TRUE(std::equal(data.row(list[i]).begin(), data.row(list[i]).end(),
                             extracted.begin() + i * 10));
    }
  }
}

TEST(LsIndex, OutOfRangePostingIsBuildError) {
  const auto data = testing::random_dataset(4, 2, 1);
  const PostingLists posting(4, {{0, {1, 4}}});
  Partition part;
  part.threshold = kUnboundedThreshold;
  part.ls_labels = {0};
  EXPECT_THROW(build_ls_index(data, posting, part, {}), BuildError);
}

TEST(BfsSearch, NonLsLabelIsLookupError) {
  const auto idx = single_label_index(testing::random_dataset(5, 4, 1));
  EXPECT_THROW(bfs_search(idx.ls, idx.data.row(0), 5, 3), LookupError);
}

TEST(BfsSearch, LargeKReturnsWholeClusterSorted) {
  const auto idx = single_label_index(testing::random_dataset(40, 6, 1));
  const auto q = testing::random_dataset(1, 6, 2);
  const auto r = bfs_search(idx.ls, q.row(0), 4, 100);
  EXPECT_EQ(r.hits, testing::naive_topk(idx.data, q.row(0), all_ids(40), 100));
}

TEST(BfsSearch, RejectAllFilter) {
  const auto idx = single_label_index(testing::random_dataset(40, 6, 1));
  ScanStats stats;
  const auto r = bfs_search(idx.ls, idx.data.row(0), 4, 10, [](PointId) { return false; }, &stats);
  EXPECT_TRUE(r.hits.empty());
  EXPECT_EQ(stats.distance_computations, 0u);
  EXPECT_EQ(stats.filtered_out, 40u);
}

TEST(BfsSearch, FilterSkipsBeforeDistance) {
  const auto idx = single_label_index(testing::random_dataset(100, 6, 1));
  ScanStats stats;
  auto odd = [](PointId id) { return id % 2 == 1; };
  const auto r = bfs_search(idx.ls, idx.data.row(0), 4, 5, odd, &stats);
  std::vector<PointId> odds;
  for (PointId i = 1; i < 100; i += 2) odds.push_back(i);
  EXPECT_EQ(r.hits, testing::naive_topk(idx.data, idx.data.row(0), odds, 5));
  EXPECT_EQ(stats.distance_computations, 50u);
}

TEST(BfsSearch, ExactOnRandomCluster) {
  const auto idx = single_label_index(testing::random_dataset(1500, 64, 5));
  const auto queries = testing::random_dataset(50, 64, 6);
  const auto ids = all_ids(1500);
  for (std::size_t q = 0; q < 50; ++q) {
    EXPECT_EQ(bfs_search(idx.ls, queries.row(q), 4, 10).hits,
              testing::naive_topk(idx.data, queries.row(q), ids, 10));
  }
}

// Shapes that exercise the remainder paths: dims not divisible by the
// chunk size and clusters that leave a partial final group.
TEST(BfsSearch, ExactOnOddShapes) {
  for (const std::size_t dim : {1u, 3u, 5u, 7u, 13u, 33u}) {
    for (const std::size_t n : {1u, 31u, 33u, 95u}) {
      const auto idx = single_label_index(testing::random_dataset(n, dim, dim * 100 + n));
      const auto q = testing::random_dataset(3, dim, 9);
      for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(bfs_search(idx.ls, q.row(i), 4, 7).hits,
                  testing::naive_topk(idx.data, q.row(i), all_ids(n), 7))
            << "dim=" << dim << " n=" << n;
      }
    }
  }
}

TEST(BfsSearch, ExactForEveryChunkWidth) {
  const auto data = testing::random_dataset(90, 12, 4);
  std::vector<std::vector<Label>> per_point(90, std::vector<Label>{1});
  const auto posting = build_posting_lists(LabelAssignment(per_point));
  const auto part = partition_labels(posting, kUnboundedThreshold);
  const auto q = testing::random_dataset(5, 12, 5);
  for (const std::size_t c : {1u, 2u, 3u, 4u, 8u}) {
    LSBuildOptions opts;
    opts.chunk_elems = c;
    opts.group_width = 16;
    const auto ls = build_ls_index(data, posting, part, opts);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(bfs_search(ls, q.row(i), 1, 10).hits,
                testing::naive_topk(data, q.row(i), all_ids(90), 10))
          << "c=" << c;
    }
  }
}

TEST(BfsSearch, InnerProductMetric) {
  const auto idx = single_label_index(testing::random_dataset(300, 16, 8), Metric::kInnerProduct);
  const auto q = testing::random_dataset(10, 16, 9);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(bfs_search(idx.ls, q.row(i), 4, 10).hits,
              testing::naive_topk(idx.data, q.row(i), all_ids(300), 10, Metric::kInnerProduct));
  }
}

TEST(BfsSearch, DimensionMismatch) {
  const auto idx = single_label_index(testing::random_dataset(5, 4, 1));
  const std::vector<float> q(3, 0.0f);
  EXPECT_THROW(bfs_search(idx.ls, q, 4, 1), ParameterError);
}

TEST(LsMemory, PaperExample) {
  const double gib = 1024.0 * 1024.0 * 1024.0;
  EXPECT_NEAR(estimate_ls_memory(1e8, 128, 0.17, 4) / gib, 8.11, 0.01);
  EXPECT_EQ(estimate_ls_memory(1e8, 128, 0.0, 4), 0.0);
}

TEST(LsSerialization, RoundTrip) {
  const auto data = testing::random_dataset(200, 7, 5);
  const auto labels = testing::random_labels(200, 4, 0.3, 6);
  const auto posting = build_posting_lists(labels);
  const auto ls = build_ls_index(data, posting, partition_labels(posting, kUnboundedThreshold), {});
  const auto bytes = serialize_ls_index(ls);
  EXPECT_EQ(deserialize_ls_index(bytes), ls);
  auto corrupt = bytes;
  corrupt.resize(corrupt.size() - 4);
  EXPECT_THROW(deserialize_ls_index(corrupt), Error);
}

}  // namespace
}  // namespace vecflow
