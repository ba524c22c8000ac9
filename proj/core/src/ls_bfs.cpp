#include "vecflow/ls_bfs.hpp"

#include <algorithm>
#include <string>

#include "binary_io.hpp"
#include "vecflow/distance.hpp"

namespace vecflow {

namespace {

constexpr std::uint32_t kLsMagic = 0x534C4656;  // "VFLS"
constexpr std::uint32_t kLsVersion = 1;

}  // namespace

std::size_t LSIndex::slot_of(Label label) const {
  const auto it = std::lower_bound(label_order.begin(), label_order.end(), label);
  if (it == label_order.end() || *it != label) {
    throw LookupError("label " + std::to_string(label) + " is not a LS label");
  }
  return static_cast<std::size_t>(it - label_order.begin());
}

bool LSIndex::contains(Label label) const {
  return std::binary_search(label_order.begin(), label_order.end(), label);
}

std::vector<float> LSIndex::extract(Label label) const {
  const std::size_t s = slot_of(label);
  const std::size_t first_group = label_offsets[s] / group_width;
  const auto region = std::span<const float>(blocks).subspan(first_group * group_elems());
  return deinterleave_layout(region, label_sizes[s], dim, group_width, chunk_elems);
}

std::size_t LSIndex::metadata_bytes() const {
  return label_order.capacity() * sizeof(Label) +
         label_sizes.capacity() * sizeof(std::uint32_t) +
         label_offsets.capacity() * sizeof(std::uint64_t);
}

LSIndex build_ls_index(const VectorDataset& dataset, const PostingLists& posting,
                       const Partition& partition, const LSBuildOptions& options) {
  if (options.group_width == 0 || options.chunk_elems == 0) {
    throw ParameterError("group width and chunk size must be at least 1");
  }
  LSIndex index;
  index.threshold = partition.threshold;
  index.group_width = static_cast<std::uint32_t>(options.group_width);
  index.chunk_elems = static_cast<std::uint32_t>(options.chunk_elems);
  index.dim = static_cast<std::uint32_t>(dataset.dim());
  index.metric = options.metric;
  index.label_order = partition.ls_labels;

  const std::size_t n_labels = index.label_order.size();
  const std::size_t W = options.group_width;
  index.label_sizes.resize(n_labels);
  index.label_offsets.resize(n_labels);
  std::uint64_t slots = 0;
  for (std::size_t s = 0; s < n_labels; ++s) {
    const auto& ids = posting.list(index.label_order[s]);
    if (ids.empty()) {
      throw BuildError("LS label " + std::to_string(index.label_order[s]) + " is empty");
    }
    index.label_sizes[s] = static_cast<std::uint32_t>(ids.size());
    index.label_offsets[s] = slots;
    slots += round_up(ids.size(), W);
  }

  index.index_mapping.assign(slots, kInvalidPoint);
  index.blocks.assign(slots / W * index.group_elems(), 0.0f);
  const std::size_t dim = dataset.dim();
  std::vector<float> gathered;
  for (std::size_t s = 0; s < n_labels; ++s) {
    const auto& ids = posting.list(index.label_order[s]);
    gathered.resize(ids.size() * dim);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (ids[j] >= dataset.n_points()) {
        throw BuildError("posting list of label " + std::to_string(index.label_order[s]) +
                         " references point " + std::to_string(ids[j]) +
                         " but the dataset has " + std::to_string(dataset.n_points()) +
                         " points");
      }
      const auto row = dataset.row(ids[j]);
      std::copy(row.begin(), row.end(), gathered.begin() + static_cast<std::ptrdiff_t>(j * dim));
      index.index_mapping[index.label_offsets[s] + j] = ids[j];
    }
    const auto region = interleave_layout<float>(gathered, dim, W, options.chunk_elems);
    std::copy(region.begin(), region.end(),
              index.blocks.begin() +
                  static_cast<std::ptrdiff_t>(index.label_offsets[s] / W * index.group_elems()));
  }
  return index;
}

namespace {

// Adds one group's chunks into the per-vector lane accumulators. Element d
// of the query lands in lane d % kDistanceLanes, matching the row-major
// kernel, so scan distances equal distance() bit for bit.
template <Metric M, std::size_t C>
void accumulate_group(const float* group, const float* query, std::size_t chunks,
                      std::size_t width, std::span<const std::uint32_t> active,
                      LaneAccumulator* acc) {
  static_assert(kDistanceLanes % C == 0);
  constexpr std::size_t kPerRound = kDistanceLanes / C;  // chunks covering all lanes once
  const std::size_t stride = width * C;
  const std::size_t full = chunks - chunks % kPerRound;
  for (const std::uint32_t v : active) {
    float lane[kDistanceLanes] = {};
    const float* x = group + v * C;
    std::size_t t = 0;
    for (; t < full; t += kPerRound) {
      for (std::size_t h = 0; h < kPerRound; ++h) {
        const float* xc = x + (t + h) * stride;
        const float* qc = query + (t + h) * C;
        for (std::size_t e = 0; e < C; ++e) lane[h * C + e] += distance_term(M, qc[e], xc[e]);
      }
    }
    for (std::size_t h = 0; t < chunks; ++t, ++h) {
      const float* xc = x + t * stride;
      const float* qc = query + t * C;
      for (std::size_t e = 0; e < C; ++e) lane[h * C + e] += distance_term(M, qc[e], xc[e]);
    }
    std::copy(lane, lane + kDistanceLanes, acc[v].lane);
  }
}

template <Metric M>
void accumulate_group_any(const float* group, const float* query, std::size_t chunks,
                          std::size_t width, std::size_t c, std::span<const std::uint32_t> active,
                          LaneAccumulator* acc) {
  for (const std::uint32_t v : active) acc[v] = LaneAccumulator{};
  for (std::size_t t = 0; t < chunks; ++t) {
    const float* chunk = group + t * width * c;
    for (const std::uint32_t v : active) {
      const float* x = chunk + v * c;
      for (std::size_t e = 0; e < c; ++e) {
        const std::size_t d = t * c + e;
        acc[v].lane[d % kDistanceLanes] += distance_term(M, query[d], x[e]);
      }
    }
  }
}

#ifdef VECFLOW_VECTOR_EXT
// 16-byte chunks: two consecutive chunks fill lanes 0-3 and 4-7.
template <Metric M>
void accumulate_group4(const float* group, const float* query, std::size_t chunks,
                       std::size_t width, std::span<const std::uint32_t> active,
                       LaneAccumulator* acc) {
  using detail::Float4;
  const std::size_t stride = width * 4;
  const std::size_t full = chunks - chunks % 2;
  for (const std::uint32_t v : active) {
    Float4 lo = {0, 0, 0, 0};
    Float4 hi = {0, 0, 0, 0};
    const float* x = group + v * 4;
    std::size_t t = 0;
    for (; t < full; t += 2) {
      lo += detail::term4<M>(detail::load4(query + t * 4), detail::load4(x + t * stride));
      hi += detail::term4<M>(detail::load4(query + t * 4 + 4), detail::load4(x + (t + 1) * stride));
    }
    if (t < chunks) lo += detail::term4<M>(detail::load4(query + t * 4), detail::load4(x + t * stride));
    detail::store4(acc[v].lane, lo);
    detail::store4(acc[v].lane + 4, hi);
  }
}
#endif

template <Metric M>
void accumulate(const float* group, const float* query, std::size_t chunks, std::size_t width,
                std::size_t c, std::span<const std::uint32_t> active, LaneAccumulator* acc) {
  switch (c) {
    case 1:
      return accumulate_group<M, 1>(group, query, chunks, width, active, acc);
    case 2:
      return accumulate_group<M, 2>(group, query, chunks, width, active, acc);
    case 4:
#ifdef VECFLOW_VECTOR_EXT
      return accumulate_group4<M>(group, query, chunks, width, active, acc);
#else
      return accumulate_group<M, 4>(group, query, chunks, width, active, acc);
#endif
    case 8:
      return accumulate_group<M, 8>(group, query, chunks, width, active, acc);
    default:
      return accumulate_group_any<M>(group, query, chunks, width, c, active, acc);
  }
}

}  // namespace

TopKResult bfs_search(const LSIndex& index, std::span<const float> query, Label label,
                      std::size_t k, PointFilter filter, ScanStats* stats) {
  if (query.size() != index.dim) {
    throw ParameterError("query has dimension " + std::to_string(query.size()) +
                         ", index has " + std::to_string(index.dim));
  }
  const std::size_t s = index.slot_of(label);
  TopKResult result;
  if (k == 0) return result;

  const std::size_t W = index.group_width;
  const std::size_t c = index.chunk_elems;
  const std::size_t group_elems = index.group_elems();
  const std::size_t chunks = index.padded_dim() / c;
  const std::size_t size = index.label_sizes[s];
  const std::size_t first_slot = index.label_offsets[s];

  // Per-thread buffers; a scan allocates nothing once a thread is warm.
  thread_local std::vector<float> padded;
  thread_local std::vector<LaneAccumulator> acc;
  thread_local std::vector<std::uint32_t> active;
  thread_local std::vector<Hit> heap;

  // Padding elements are zero on both sides and contribute +0 to a lane.
  const float* q = query.data();
  if (index.padded_dim() != query.size()) {
    padded.assign(index.padded_dim(), 0.0f);
    std::copy(query.begin(), query.end(), padded.begin());
    q = padded.data();
  }
  acc.resize(W);
  active.clear();
  active.reserve(W);
  heap.clear();
  heap.reserve(k + 1);
  ScanStats local_stats;

  for (std::size_t g0 = 0; g0 < size; g0 += W) {
    const std::size_t slot0 = first_slot + g0;
    active.clear();
    for (std::size_t v = 0; v < W && g0 + v < size; ++v) {
      if (filter && !filter(index.index_mapping[slot0 + v])) {
        ++local_stats.filtered_out;
        continue;
      }
      active.push_back(static_cast<std::uint32_t>(v));
    }
    if (active.empty()) continue;

    const float* group = index.blocks.data() + slot0 / W * group_elems;
    if (index.metric == Metric::kL2) {
      accumulate<Metric::kL2>(group, q, chunks, W, c, active, acc.data());
    } else {
      accumulate<Metric::kInnerProduct>(group, q, chunks, W, c, active, acc.data());
    }
    for (const std::uint32_t v : active) {
      const Hit hit{index.index_mapping[slot0 + v], finish_distance(index.metric, acc[v])};
      ++local_stats.distance_computations;
      // Max-heap on (distance, id): the root is the current k-th best.
      if (heap.size() < k) {
        heap.push_back(hit);
        std::push_heap(heap.begin(), heap.end(), hit_less);
      } else if (hit_less(hit, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), hit_less);
        heap.back() = hit;
        std::push_heap(heap.begin(), heap.end(), hit_less);
      }
    }
  }

  std::sort_heap(heap.begin(), heap.end(), hit_less);
  result.hits.assign(heap.begin(), heap.end());
  if (stats != nullptr) *stats = local_stats;
  return result;
}

double estimate_ls_memory(double n_points, double dim, double ls_labels_per_point,
                          double element_bytes) {
  return n_points * dim * ls_labels_per_point * element_bytes;
}

std::vector<std::uint8_t> serialize_ls_index(const LSIndex& index) {
  detail::ByteWriter w;
  w.put<std::uint32_t>(kLsMagic);
  w.put<std::uint32_t>(kLsVersion);
  w.put<std::uint64_t>(index.threshold);
  w.put<std::uint32_t>(index.group_width);
  w.put<std::uint32_t>(index.chunk_elems);
  w.put<std::uint32_t>(index.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.metric));
  w.put<std::uint64_t>(index.label_order.size());
  w.put_vector(index.label_order);
  w.put_vector(index.label_sizes);
  w.put_vector(index.label_offsets);
  w.put_vector(index.index_mapping);
  w.put_vector(index.blocks);
  return std::move(w.bytes());
}

LSIndex deserialize_ls_index(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kLsMagic) throw FormatError("not a LS index section");
  const auto version = r.get<std::uint32_t>();
  if (version != kLsVersion) {
    throw FormatError("unsupported LS index version " + std::to_string(version));
  }
  LSIndex index;
  index.threshold = r.get<std::uint64_t>();
  index.group_width = r.get<std::uint32_t>();
  index.chunk_elems = r.get<std::uint32_t>();
  index.dim = r.get<std::uint32_t>();
  const auto metric = r.get<std::uint32_t>();
  if (metric > 1) throw FormatError("unknown metric id " + std::to_string(metric));
  index.metric = static_cast<Metric>(metric);
  const auto n_labels = r.get<std::uint64_t>();
  index.label_order = r.get_vector<Label>();
  index.label_sizes = r.get_vector<std::uint32_t>();
  index.label_offsets = r.get_vector<std::uint64_t>();
  index.index_mapping = r.get_vector<PointId>();
  index.blocks = r.get_vector<float>();
  if (!r.done()) throw FormatError("trailing bytes after LS index section");

  if (index.group_width == 0 || index.chunk_elems == 0 || index.label_order.size() != n_labels ||
      index.label_sizes.size() != n_labels || index.label_offsets.size() != n_labels ||
      index.total_slots() % index.group_width != 0 ||
      index.blocks.size() != index.total_slots() / index.group_width * index.group_elems()) {
    throw FormatError("inconsistent LS index section sizes");
  }
  std::uint64_t expected = 0;
  for (std::size_t s = 0; s < n_labels; ++s) {
    if (index.label_offsets[s] != expected) throw FormatError("LS label offsets are not contiguous");
    expected += round_up(index.label_sizes[s], index.group_width);
  }
  if (expected != index.total_slots()) throw FormatError("LS label sizes do not cover the slots");
  return index;
}

}  // namespace vecflow
