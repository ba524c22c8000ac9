#include "vecflow/hs_graph.hpp"

#include <algorithm>
#include <atomic>
#include <string>
#include <thread>

#include "binary_io.hpp"
#include "vecflow/distance.hpp"
#include "vecflow/error.hpp"
#include "vecflow/rng.hpp"

namespace vecflow {

namespace {

constexpr std::uint32_t kHsMagic = 0x53484656;  // "VFHS"
constexpr std::uint32_t kHsVersion = 1;

// Bounded candidate list ordered by (distance, id).
class NeighborList {
 public:
  explicit NeighborList(std::size_t capacity) : capacity_(capacity) {
    dist_.reserve(capacity);
    ids_.reserve(capacity);
  }

  void offer(float d, std::uint32_t id) {
    if (dist_.size() == capacity_) {
      const float worst = dist_.back();
      if (d > worst || (d == worst && id > ids_.back())) return;
      dist_.pop_back();
      ids_.pop_back();
    }
    std::size_t pos = dist_.size();
    while (pos > 0 && (d < dist_[pos - 1] || (d == dist_[pos - 1] && id < ids_[pos - 1]))) {
      --pos;
    }
    dist_.insert(dist_.begin() + static_cast<std::ptrdiff_t>(pos), d);
    ids_.insert(ids_.begin() + static_cast<std::ptrdiff_t>(pos), id);
  }

  bool full() const { return dist_.size() == capacity_; }
  float worst() const { return dist_.back(); }
  const std::vector<std::uint32_t>& ids() const { return ids_; }

 private:
  std::size_t capacity_;
  std::vector<float> dist_;
  std::vector<std::uint32_t> ids_;
};

struct TopEntry {
  float distance;
  PointId global;
  std::uint32_t local;
  bool expanded;
};

bool entry_less(const TopEntry& a, const TopEntry& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.global < b.global;
}

}  // namespace

std::vector<std::uint32_t> build_knn_graph(std::span<const float> vectors, std::size_t dim,
                                           std::size_t degree, Metric metric) {
  if (dim == 0 || degree == 0) throw ParameterError("knn graph needs dim >= 1 and degree >= 1");
  if (vectors.size() % dim != 0) throw ParameterError("vector buffer is not a multiple of dim");
  const std::size_t m = vectors.size() / dim;
  if (m == 0) throw ParameterError("knn graph needs at least one vector");

  std::vector<std::uint32_t> rows(m * degree, 0);
  if (m == 1) return rows;

  const std::size_t effective = std::min(degree, m - 1);
  std::vector<NeighborList> best(m, NeighborList(effective));

  // Each unordered pair is evaluated once and offered to both endpoints.
  // The top list under the strict (distance, id) order is unique, so the
  // traversal order does not affect the result.
  constexpr std::size_t kBlock = 128;
  const float* base = vectors.data();
  for (std::size_t i0 = 0; i0 < m; i0 += kBlock) {
    const std::size_t i1 = std::min(m, i0 + kBlock);
    for (std::size_t j0 = i0; j0 < m; j0 += kBlock) {
      const std::size_t j1 = std::min(m, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        const float* xi = base + i * dim;
        NeighborList& bi = best[i];
        for (std::size_t j = std::max(j0, i + 1); j < j1; ++j) {
          const float d = distance(metric, xi, base + j * dim, dim);
          bi.offer(d, static_cast<std::uint32_t>(j));
          NeighborList& bj = best[j];
          if (!bj.full() || d <= bj.worst()) bj.offer(d, static_cast<std::uint32_t>(i));
        }
      }
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    const auto& ids = best[i].ids();
    auto* row = rows.data() + i * degree;
    for (std::size_t r = 0; r < degree; ++r) row[r] = ids[std::min(r, ids.size() - 1)];
  }
  return rows;
}

std::size_t HSIndex::slot_of(Label label) const {
  const auto it = std::lower_bound(label_order.begin(), label_order.end(), label);
  if (it == label_order.end() || *it != label) {
    throw LookupError("label " + std::to_string(label) + " has no graph (not a HS label)");
  }
  return static_cast<std::size_t>(it - label_order.begin());
}

bool HSIndex::contains(Label label) const {
  return std::binary_search(label_order.begin(), label_order.end(), label);
}

GraphView HSIndex::slice(Label label) const {
  const std::size_t slot = slot_of(label);
  const std::size_t first = label_offsets[slot];
  const std::size_t size = label_sizes[slot];
  GraphView view;
  view.degree = degree;
  view.rows = std::span<const std::uint32_t>(graph_rows).subspan(first * degree, size * degree);
  view.mapping = std::span<const PointId>(index_mapping).subspan(first, size);
  return view;
}

std::size_t HSIndex::metadata_bytes() const {
  return label_order.capacity() * sizeof(Label) +
         label_sizes.capacity() * sizeof(std::uint32_t) +
         label_offsets.capacity() * sizeof(std::uint64_t);
}

GraphView slice_graph(const HSIndex& index, Label label) { return index.slice(label); }

HSIndex build_hs_index(const VectorDataset& dataset, const PostingLists& posting,
                       const Partition& partition, const HSBuildOptions& options) {
  if (options.degree == 0) throw ParameterError("graph degree must be at least 1");
  HSIndex index;
  index.threshold = partition.threshold;
  index.degree = static_cast<std::uint32_t>(options.degree);
  index.metric = options.metric;
  index.label_order = partition.hs_labels;

  const std::size_t n_labels = index.label_order.size();
  index.label_sizes.resize(n_labels);
  index.label_offsets.resize(n_labels);
  std::uint64_t offset = 0;
  for (std::size_t s = 0; s < n_labels; ++s) {
    const auto& ids = posting.list(index.label_order[s]);
    if (ids.empty()) {
      throw BuildError("HS label " + std::to_string(index.label_order[s]) + " is empty");
    }
    for (const PointId id : ids) {
      if (id >= dataset.n_points()) {
        throw BuildError("posting list of label " + std::to_string(index.label_order[s]) +
                         " references point " + std::to_string(id) + " but the dataset has " +
                         std::to_string(dataset.n_points()) + " points");
      }
    }
    index.label_sizes[s] = static_cast<std::uint32_t>(ids.size());
    index.label_offsets[s] = offset;
    offset += ids.size();
  }

  index.index_mapping.resize(offset);
  index.graph_rows.resize(offset * options.degree);

  const std::size_t dim = dataset.dim();
  auto build_one = [&](std::size_t s) {
    const auto& ids = posting.list(index.label_order[s]);
    const std::size_t first = index.label_offsets[s];
    std::copy(ids.begin(), ids.end(), index.index_mapping.begin() + static_cast<std::ptrdiff_t>(first));
    // Temporary gather for cache-friendly construction; released afterwards.
    std::vector<float> local(ids.size() * dim);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const auto row = dataset.row(ids[j]);
      std::copy(row.begin(), row.end(), local.begin() + static_cast<std::ptrdiff_t>(j * dim));
    }
    const auto rows = build_knn_graph(local, dim, options.degree, options.metric);
    std::copy(rows.begin(), rows.end(),
              index.graph_rows.begin() + static_cast<std::ptrdiff_t>(first * options.degree));
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n_labels));
  if (threads <= 1) {
    for (std::size_t s = 0; s < n_labels; ++s) build_one(s);
  } else {
    // Largest clusters first so the tail is short.
    std::vector<std::size_t> order(n_labels);
    for (std::size_t s = 0; s < n_labels; ++s) order[s] = s;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return index.label_sizes[a] > index.label_sizes[b];
    });
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_labels; i = next++) build_one(order[i]);
      });
    }
    for (auto& th : pool) th.join();
  }
  return index;
}

void SearchParams::validate() const {
  if (k == 0) throw ParameterError("k must be at least 1");
  if (itopk < k) {
    throw ParameterError("itopk (" + std::to_string(itopk) + ") must be at least k (" +
                         std::to_string(k) + ")");
  }
  if (max_iterations == 0) throw ParameterError("max_iterations must be at least 1");
}

TopKResult graph_search(const HSIndex& index, const VectorDataset& vectors,
                        std::span<const float> query, Label label, const SearchParams& params,
                        std::uint64_t query_ordinal, PointFilter filter,
                        GraphSearchStats* stats) {
  params.validate();
  if (query.size() != vectors.dim()) {
    throw ParameterError("query has dimension " + std::to_string(query.size()) +
                         ", index has " + std::to_string(vectors.dim()));
  }
  const GraphView graph = index.slice(label);
  const std::size_t m = graph.size();
  const std::size_t width = std::min(params.itopk, m);
  const std::size_t dim = vectors.dim();
  const float* base = vectors.data().data();

  // Per-thread buffers; a search allocates nothing once a thread is warm.
  thread_local std::vector<std::uint64_t> seen;
  thread_local std::vector<TopEntry> top;
  thread_local std::vector<TopEntry> fresh;
  seen.assign((m + 63) / 64, 0);
  auto test_and_set = [&](std::uint32_t local) {
    auto& word = seen[local >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (local & 63);
    const bool was = (word & bit) != 0;
    word |= bit;
    return was;
  };

  GraphSearchStats local_stats;
  top.clear();
  top.reserve(width + index.degree);

  auto evaluate = [&](std::uint32_t local) -> bool {
    const PointId global = graph.mapping[local];
    const float d = distance(index.metric, query.data(), base + std::size_t{global} * dim, dim);
    ++local_stats.distance_computations;
    if (filter && !filter(global)) return false;
    top.push_back({d, global, local, false});
    return true;
  };

  // Initial top-M: `width` distinct vertices (Floyd's sampling).
  if (width == m) {
    for (std::uint32_t j = 0; j < m; ++j) {
      test_and_set(j);
      evaluate(j);
    }
  } else {
    CounterRng rng(params.rng_seed, query_ordinal, label);
    for (std::size_t j = m - width; j < m; ++j) {
      auto pick = static_cast<std::uint32_t>(rng.below(j + 1));
      if (test_and_set(pick)) {
        pick = static_cast<std::uint32_t>(j);
        test_and_set(pick);
      }
      evaluate(pick);
    }
  }
  std::sort(top.begin(), top.end(), entry_less);

  fresh.clear();
  fresh.reserve(index.degree);
  while (local_stats.iterations < params.max_iterations) {
    const auto parent = std::find_if(top.begin(), top.end(),
                                     [](const TopEntry& e) { return !e.expanded; });
    if (parent == top.end()) break;
    parent->expanded = true;
    ++local_stats.iterations;

    fresh.clear();
    for (const std::uint32_t child : graph.row(parent->local)) {
      if (test_and_set(child)) continue;
      const PointId global = graph.mapping[child];
      const float d =
          distance(index.metric, query.data(), base + std::size_t{global} * dim, dim);
      ++local_stats.distance_computations;
      if (filter && !filter(global)) continue;
      fresh.push_back({d, global, child, false});
    }
    for (const TopEntry& e : fresh) {
      if (top.size() == width && !entry_less(e, top.back())) continue;
      top.insert(std::upper_bound(top.begin(), top.end(), e, entry_less), e);
      if (top.size() > width) top.pop_back();
    }
  }

  TopKResult result;
  const std::size_t n = std::min(params.k, top.size());
  result.hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) result.hits.push_back({top[i].global, top[i].distance});
  if (stats != nullptr) *stats = local_stats;
  return result;
}

double estimate_hs_memory(double n_points, double dim, double hs_labels_per_point,
                          double degree, double element_bytes) {
  return n_points * (dim + hs_labels_per_point * degree) * element_bytes;
}

std::vector<std::uint8_t> serialize_hs_index(const HSIndex& index) {
  detail::ByteWriter w;
  w.put<std::uint32_t>(kHsMagic);
  w.put<std::uint32_t>(kHsVersion);
  w.put<std::uint64_t>(index.threshold);
  w.put<std::uint32_t>(index.degree);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.metric));
  w.put<std::uint64_t>(index.label_order.size());
  w.put_vector(index.label_order);
  w.put_vector(index.label_sizes);
  w.put_vector(index.label_offsets);
  w.put_vector(index.index_mapping);
  w.put_vector(index.graph_rows);
  return std::move(w.bytes());
}

HSIndex deserialize_hs_index(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kHsMagic) throw FormatError("not a HS index section");
  const auto version = r.get<std::uint32_t>();
  if (version != kHsVersion) {
    throw FormatError("unsupported HS index version " + std::to_string(version));
  }
  HSIndex index;
  index.threshold = r.get<std::uint64_t>();
  index.degree = r.get<std::uint32_t>();
  const auto metric = r.get<std::uint32_t>();
  if (metric > 1) throw FormatError("unknown metric id " + std::to_string(metric));
  index.metric = static_cast<Metric>(metric);
  const auto n_labels = r.get<std::uint64_t>();
  index.label_order = r.get_vector<Label>();
  index.label_sizes = r.get_vector<std::uint32_t>();
  index.label_offsets = r.get_vector<std::uint64_t>();
  index.index_mapping = r.get_vector<PointId>();
  index.graph_rows = r.get_vector<std::uint32_t>();
  if (!r.done()) throw FormatError("trailing bytes after HS index section");

  if (index.degree == 0 || index.label_order.size() != n_labels ||
      index.label_sizes.size() != n_labels || index.label_offsets.size() != n_labels ||
      index.graph_rows.size() != index.index_mapping.size() * index.degree) {
    throw FormatError("inconsistent HS index section sizes");
  }
  std::uint64_t expected = 0;
  for (std::size_t s = 0; s < n_labels; ++s) {
    if (index.label_offsets[s] != expected) throw FormatError("HS label offsets are not a prefix sum");
    expected += index.label_sizes[s];
    if (expected > index.index_mapping.size()) break;
    const auto first = index.graph_rows.begin() +
                       static_cast<std::ptrdiff_t>(index.label_offsets[s] * index.degree);
    const auto last = first + static_cast<std::ptrdiff_t>(index.label_sizes[s] * index.degree);
    if (std::any_of(first, last, [&](std::uint32_t v) { return v >= index.label_sizes[s]; })) {
      throw FormatError("HS graph row references a vertex outside its label");
    }
  }
  if (expected != index.index_mapping.size()) throw FormatError("HS label sizes do not cover the mapping");
  return index;
}

}  // namespace vecflow
