#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vecflow/hs_graph.hpp"
#include "vecflow/label_ivf.hpp"
#include "vecflow/ls_bfs.hpp"
#include "vecflow/multilabel.hpp"
#include "vecflow/types.hpp"

namespace vecflow {

struct EngineConfig {
  std::uint64_t threshold = kDefaultThreshold;
  std::size_t degree = kDefaultGraphDegree;
  std::size_t group_width = kDefaultGroupWidth;
  std::size_t chunk_elems = default_chunk_elems<float>();
  Metric metric = Metric::kL2;
  std::size_t build_threads = 1;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

// Measured allocation sizes of a built index, in bytes.
struct MemoryFootprint {
  std::size_t vectors = 0;
  std::size_t hs_graphs = 0;
  std::size_t hs_mapping = 0;
  std::size_t hs_metadata = 0;
  std::size_t ls_vectors = 0;
  std::size_t ls_mapping = 0;
  std::size_t ls_metadata = 0;
  std::size_t predicates = 0;

  std::size_t hs_total() const { return vectors + hs_graphs + hs_mapping + hs_metadata; }
  std::size_t ls_total() const { return ls_vectors + ls_mapping + ls_metadata; }
  std::size_t total() const { return hs_total() + ls_total() + predicates; }
};

// Dual-structured label-centric index: one copy of the vectors, compacted
// graphs for frequent labels, interleaved scan blocks for rare ones, and a
// predicate table for multi-label checks. Immutable once built.
class VecFlowIndex {
 public:
  VecFlowIndex() = default;

  static VecFlowIndex build(VectorDataset vectors, const LabelAssignment& labels,
                            const EngineConfig& config = {});

  TopKResult search(std::span<const float> query, const LabelQuery& labels,
                    const SearchParams& params, std::uint64_t query_ordinal = 0) const;
  TopKResult search(std::span<const float> query, Label label, const SearchParams& params,
                    std::uint64_t query_ordinal = 0) const;

  // Query i runs with ordinal i.
  std::vector<TopKResult> search_batch(const VectorDataset& queries,
                                       std::span<const LabelQuery> labels,
                                       const SearchParams& params) const;

  Route route_of(Label label) const { return route(partition_, posting_, label); }

  const EngineConfig& config() const { return config_; }
  const VectorDataset& vectors() const { return vectors_; }
  const PostingLists& posting() const { return posting_; }
  const Partition& partition() const { return partition_; }
  const HSIndex& hs() const { return hs_; }
  const LSIndex& ls() const { return ls_; }
  const PredicateTable& predicates() const { return predicates_; }
  IndexView view() const;

  MemoryFootprint footprint() const;

  std::vector<std::uint8_t> serialize() const;
  static VecFlowIndex deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static VecFlowIndex load(const std::filesystem::path& path);

 private:
  void shrink_to_fit();

  EngineConfig config_;
  VectorDataset vectors_;
  PostingLists posting_;
  Partition partition_;
  HSIndex hs_;
  LSIndex ls_;
  PredicateTable predicates_;
};

inline constexpr double kBytesPerGiB = 1024.0 * 1024.0 * 1024.0;

struct MemoryModel {
  double n_points = 0;
  double dim = 0;
  double labels_per_point = 0;     // F
  double hs_labels_per_point = 0;  // F_HS
  double ls_labels_per_point = 0;  // F_LS
  double degree = 16;              // R' used by the per-label graphs
  double single_index_degree = 64; // R of the single-graph reference
  double element_bytes = 4;
  double n_labels = 0;
};

struct MemoryEstimate {
  double hs = 0;              // N * (D + F_HS * R') * b
  double ls = 0;              // N * D * F_LS * b
  double total = 0;           // hs + ls
  double mapping = 0;         // N * F * b
  double label_metadata = 0;  // two integers per label
  double single_index = 0;    // N * (D + R) * b
};

MemoryEstimate estimate_memory(const MemoryModel& model);

// Model parameters measured from a built index (F, F_HS, F_LS, R', b).
MemoryModel memory_model_of(const VecFlowIndex& index);

}  // namespace vecflow
