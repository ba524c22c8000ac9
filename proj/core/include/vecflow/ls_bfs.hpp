#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "vecflow/error.hpp"
#include "vecflow/label_ivf.hpp"
#include "vecflow/types.hpp"

namespace vecflow {

inline constexpr std::size_t kDefaultGroupWidth = 32;
inline constexpr std::size_t kChunkBytes = 16;

template <typename T>
constexpr std::size_t default_chunk_elems() {
  return kChunkBytes / sizeof(T);
}

inline std::size_t round_up(std::size_t value, std::size_t multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

// Position of element d of the v-th vector of a group inside that group.
// Groups hold `group_width` vectors; within a group the storage order is
// (v0[0:c), v1[0:c), ..., v{W-1}[0:c), v0[c:2c), v1[c:2c), ...).
inline std::size_t interleaved_offset(std::size_t v, std::size_t d, std::size_t group_width,
                                      std::size_t chunk_elems) {
  return (d / chunk_elems) * group_width * chunk_elems + v * chunk_elems + d % chunk_elems;
}

// Interleaves m row-major vectors. The output holds ceil(m / W) groups of
// W * round_up(dim, c) elements; padding slots and the tail of a partial
// final chunk are zero.
template <typename T>
std::vector<T> interleave_layout(std::span<const T> vectors, std::size_t dim,
                                 std::size_t group_width, std::size_t chunk_elems) {
  if (dim == 0 || group_width == 0 || chunk_elems == 0) {
    throw ParameterError("interleave needs dim, group width and chunk size >= 1");
  }
  const std::size_t m = vectors.size() / dim;
  const std::size_t padded_dim = round_up(dim, chunk_elems);
  const std::size_t group_elems = group_width * padded_dim;
  const std::size_t groups = (m + group_width - 1) / group_width;
  std::vector<T> out(groups * group_elems, T{});
  for (std::size_t i = 0; i < m; ++i) {
    T* group = out.data() + (i / group_width) * group_elems;
    const std::size_t v = i % group_width;
    for (std::size_t d = 0; d < dim; ++d) {
      group[interleaved_offset(v, d, group_width, chunk_elems)] = vectors[i * dim + d];
    }
  }
  return out;
}

// Inverse of interleave_layout for the first m vectors.
template <typename T>
std::vector<T> deinterleave_layout(std::span<const T> blocks, std::size_t m, std::size_t dim,
                                   std::size_t group_width, std::size_t chunk_elems) {
  const std::size_t padded_dim = round_up(dim, chunk_elems);
  const std::size_t group_elems = group_width * padded_dim;
  if (blocks.size() < (m + group_width - 1) / group_width * group_elems) {
    throw ParameterError("interleaved buffer too small for the requested vectors");
  }
  std::vector<T> out(m * dim);
  for (std::size_t i = 0; i < m; ++i) {
    const T* group = blocks.data() + (i / group_width) * group_elems;
    const std::size_t v = i % group_width;
    for (std::size_t d = 0; d < dim; ++d) {
      out[i * dim + d] = group[interleaved_offset(v, d, group_width, chunk_elems)];
    }
  }
  return out;
}

// IVF-BFS partition: each LS label owns a run of interleaved groups. Vectors
// are copied per label, so a point with several LS labels is stored once
// per label.
struct LSIndex {
  std::uint64_t threshold = kDefaultThreshold;
  std::uint32_t group_width = kDefaultGroupWidth;
  std::uint32_t chunk_elems = default_chunk_elems<float>();
  std::uint32_t dim = 0;
  Metric metric = Metric::kL2;
  std::vector<Label> label_order;            // ascending LS labels
  std::vector<std::uint32_t> label_sizes;    // S_LS
  std::vector<std::uint64_t> label_offsets;  // O_LS, first slot of each region
  std::vector<PointId> index_mapping;        // slot -> global id, kInvalidPoint for padding
  std::vector<float> blocks;                 // X_LS

  std::size_t padded_dim() const { return round_up(dim, chunk_elems); }
  std::size_t group_elems() const { return group_width * padded_dim(); }
  std::size_t total_slots() const { return index_mapping.size(); }
  std::size_t n_labels() const { return label_order.size(); }

  std::size_t slot_of(Label label) const;
  bool contains(Label label) const;

  // De-interleaved copy of one label's vectors, in posting-list order.
  std::vector<float> extract(Label label) const;

  std::size_t vector_bytes() const { return blocks.capacity() * sizeof(float); }
  std::size_t mapping_bytes() const { return index_mapping.capacity() * sizeof(PointId); }
  std::size_t metadata_bytes() const;
  std::size_t stored_bytes() const { return vector_bytes() + mapping_bytes() + metadata_bytes(); }

  friend bool operator==(const LSIndex&, const LSIndex&) = default;
};

struct LSBuildOptions {
  std::size_t group_width = kDefaultGroupWidth;
  std::size_t chunk_elems = default_chunk_elems<float>();
  Metric metric = Metric::kL2;
};

LSIndex build_ls_index(const VectorDataset& dataset, const PostingLists& posting,
                       const Partition& partition, const LSBuildOptions& options);

struct ScanStats {
  std::size_t distance_computations = 0;
  std::size_t filtered_out = 0;
};

// Exact scan over one LS label. Slots failing `filter` are skipped before
// any distance work; returns the best min(k, survivors) hits.
TopKResult bfs_search(const LSIndex& index, std::span<const float> query, Label label,
                      std::size_t k, PointFilter filter = {}, ScanStats* stats = nullptr);

// N * D * F_LS * b.
double estimate_ls_memory(double n_points, double dim, double ls_labels_per_point,
                          double element_bytes);

std::vector<std::uint8_t> serialize_ls_index(const LSIndex& index);
LSIndex deserialize_ls_index(std::span<const std::uint8_t> bytes);

}  // namespace vecflow
