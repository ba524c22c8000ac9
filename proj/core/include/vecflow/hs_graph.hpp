#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vecflow/label_ivf.hpp"
#include "vecflow/types.hpp"

namespace vecflow {

inline constexpr std::size_t kDefaultGraphDegree = 16;

// Exact k-NN graph over m local vectors (row-major, m x dim). Row j holds
// the min(degree, m-1) nearest other vertices ordered by (distance, id),
// padded to `degree` by repeating the last neighbor (or 0 when m == 1).
std::vector<std::uint32_t> build_knn_graph(std::span<const float> vectors, std::size_t dim,
                                           std::size_t degree, Metric metric);

// Zero-copy view of one label's virtual graph inside the compacted rows.
struct GraphView {
  std::span<const std::uint32_t> rows;  // size * degree local ids
  std::span<const PointId> mapping;     // local id -> global id
  std::size_t degree = 0;

  std::size_t size() const { return mapping.size(); }
  std::span<const std::uint32_t> row(std::size_t local) const {
    return rows.subspan(local * degree, degree);
  }
};

// Redundancy-bypassing IVF-Graph: one fixed-degree graph per HS label,
// stored back to back, addressing the shared global vectors through
// index_mapping. No vector data lives here.
struct HSIndex {
  std::uint64_t threshold = kDefaultThreshold;
  std::uint32_t degree = kDefaultGraphDegree;
  Metric metric = Metric::kL2;
  std::vector<Label> label_order;           // ascending HS labels
  std::vector<std::uint32_t> label_sizes;   // S_HS
  std::vector<std::uint64_t> label_offsets; // O_HS, first row of each graph
  std::vector<PointId> index_mapping;       // M_HS, row -> global id
  std::vector<std::uint32_t> graph_rows;    // total_rows * degree local ids

  std::size_t n_labels() const { return label_order.size(); }
  std::size_t total_rows() const { return index_mapping.size(); }

  // Position of `label` in label_order; throws LookupError for non-HS labels.
  std::size_t slot_of(Label label) const;
  bool contains(Label label) const;

  // Rows [O_HS[l], O_HS[l] + S_HS[l]) and the matching mapping entries.
  GraphView slice(Label label) const;

  std::size_t graph_bytes() const { return graph_rows.capacity() * sizeof(std::uint32_t); }
  std::size_t mapping_bytes() const { return index_mapping.capacity() * sizeof(PointId); }
  std::size_t metadata_bytes() const;
  std::size_t stored_bytes() const { return graph_bytes() + mapping_bytes() + metadata_bytes(); }

  friend bool operator==(const HSIndex&, const HSIndex&) = default;
};

// Same as HSIndex::slice.
GraphView slice_graph(const HSIndex& index, Label label);

struct HSBuildOptions {
  std::size_t degree = kDefaultGraphDegree;
  Metric metric = Metric::kL2;
  // Labels are independent; >1 builds several graphs concurrently.
  std::size_t threads = 1;
};

HSIndex build_hs_index(const VectorDataset& dataset, const PostingLists& posting,
                       const Partition& partition, const HSBuildOptions& options);

struct SearchParams {
  std::size_t itopk = 64;  // width of the internal top-M list
  std::size_t k = 10;
  std::size_t max_iterations = 100000;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct GraphSearchStats {
  std::size_t iterations = 0;
  std::size_t distance_computations = 0;
};

// Best-first search inside one label's graph. The top-M list starts with
// min(itopk, |C_l|) distinct random vertices drawn from a stream keyed by
// (rng_seed, query_ordinal, label); each iteration expands the best
// unexpanded entry. Candidates failing `filter` are dropped after their
// distance is computed. Stops when every top-M entry is expanded or after
// max_iterations expansions.
TopKResult graph_search(const HSIndex& index, const VectorDataset& vectors,
                        std::span<const float> query, Label label, const SearchParams& params,
                        std::uint64_t query_ordinal = 0, PointFilter filter = {},
                        GraphSearchStats* stats = nullptr);

// N * (D + F_HS * R') * b.
double estimate_hs_memory(double n_points, double dim, double hs_labels_per_point,
                          double degree, double element_bytes);

std::vector<std::uint8_t> serialize_hs_index(const HSIndex& index);
HSIndex deserialize_hs_index(std::span<const std::uint8_t> bytes);

}  // namespace vecflow
