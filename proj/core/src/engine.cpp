#include "vecflow/engine.hpp"

#include <string>

#include "binary_io.hpp"
#include "vecflow/dataset_io.hpp"
#include "vecflow/error.hpp"

namespace vecflow {

namespace {

constexpr std::uint32_t kIndexMagic = 0x58494656;  // "VFIX"
constexpr std::uint32_t kIndexVersion = 1;

enum class Section : std::uint32_t {
  kPartition = 1,
  kVectors = 2,
  kHs = 3,
  kLs = 4,
  kPredicates = 5,
};

void put_section(detail::ByteWriter& w, Section tag, const std::vector<std::uint8_t>& payload) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tag));
  w.put<std::uint64_t>(payload.size());
  w.put_array(std::span<const std::uint8_t>(payload));
}

std::span<const std::uint8_t> get_section(detail::ByteReader& r,
                                          std::span<const std::uint8_t> bytes, Section tag) {
  const std::size_t at = r.offset();
  const auto found = r.get<std::uint32_t>();
  if (found != static_cast<std::uint32_t>(tag)) {
    throw FormatError("expected section " + std::to_string(static_cast<std::uint32_t>(tag)) +
                      " at byte offset " + std::to_string(at) + ", found " +
                      std::to_string(found));
  }
  const auto length = r.get<std::uint64_t>();
  if (length > r.remaining()) {
    throw FormatError("section at byte offset " + std::to_string(at) + " is truncated");
  }
  const auto payload = bytes.subspan(r.offset(), length);
  r.skip(length);
  return payload;
}

}  // namespace

VecFlowIndex VecFlowIndex::build(VectorDataset vectors, const LabelAssignment& labels,
                                 const EngineConfig& config) {
  if (vectors.n_points() != labels.n_points()) {
    throw ParameterError("dataset has " + std::to_string(vectors.n_points()) +
                         " points but the label file has " + std::to_string(labels.n_points()) +
                         " lines");
  }
  VecFlowIndex index;
  index.config_ = config;
  index.vectors_ = std::move(vectors);
  index.posting_ = build_posting_lists(labels);
  index.partition_ = partition_labels(index.posting_, config.threshold);
  index.hs_ = build_hs_index(index.vectors_, index.posting_, index.partition_,
                             {config.degree, config.metric, config.build_threads});
  index.ls_ = build_ls_index(index.vectors_, index.posting_, index.partition_,
                             {config.group_width, config.chunk_elems, config.metric});
  index.predicates_ = build_predicate_table(labels);
  index.shrink_to_fit();
  return index;
}

// Byte accounting reads capacities, so drop any growth slack after build.
void VecFlowIndex::shrink_to_fit() {
  vectors_.data().shrink_to_fit();
  for (auto* v : {&partition_.hs_labels, &partition_.ls_labels, &hs_.label_order,
                  &hs_.index_mapping, &ls_.label_order, &ls_.index_mapping,
                  &predicates_.global_labels}) {
    v->shrink_to_fit();
  }
  hs_.label_sizes.shrink_to_fit();
  hs_.label_offsets.shrink_to_fit();
  hs_.graph_rows.shrink_to_fit();
  ls_.label_sizes.shrink_to_fit();
  ls_.label_offsets.shrink_to_fit();
  ls_.blocks.shrink_to_fit();
  predicates_.label_offsets.shrink_to_fit();
  predicates_.label_counts.shrink_to_fit();
}

IndexView VecFlowIndex::view() const {
  return {&vectors_, &posting_, &partition_, &hs_, &ls_, &predicates_};
}

TopKResult VecFlowIndex::search(std::span<const float> query, const LabelQuery& labels,
                                const SearchParams& params, std::uint64_t query_ordinal) const {
  params.validate();
  if (query.size() != vectors_.dim()) {
    throw ParameterError("query has dimension " + std::to_string(query.size()) +
                         ", index has " + std::to_string(vectors_.dim()));
  }
  if (labels.labels.empty()) throw ParameterError("query carries no labels");
  const IndexView v = view();
  if (labels.labels.size() == 1) {
    return search_single(v, query, labels.labels.front(), params, query_ordinal);
  }
  switch (labels.op) {
    case LabelOp::kSingle:
      throw ParameterError("single-label query carries " + std::to_string(labels.labels.size()) +
                           " labels");
    case LabelOp::kOr:
      return search_or(v, query, labels.labels, params, query_ordinal);
    case LabelOp::kAnd:
      return labels.policy == AndPolicy::kGreedy
                 ? search_and_greedy(v, query, labels.labels, params, query_ordinal)
                 : search_and_parallel(v, query, labels.labels, params, query_ordinal);
  }
  return {};
}

TopKResult VecFlowIndex::search(std::span<const float> query, Label label,
                                const SearchParams& params, std::uint64_t query_ordinal) const {
  return search(query, LabelQuery::single(label), params, query_ordinal);
}

std::vector<TopKResult> VecFlowIndex::search_batch(const VectorDataset& queries,
                                                   std::span<const LabelQuery> labels,
                                                   const SearchParams& params) const {
  if (queries.n_points() != labels.size()) {
    throw ParameterError(std::to_string(queries.n_points()) + " query vectors but " +
                         std::to_string(labels.size()) + " label expressions");
  }
  std::vector<TopKResult> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back(search(queries.row(i), labels[i], params, i));
  }
  return out;
}

MemoryFootprint VecFlowIndex::footprint() const {
  MemoryFootprint f;
  f.vectors = vectors_.stored_bytes();
  f.hs_graphs = hs_.graph_bytes();
  f.hs_mapping = hs_.mapping_bytes();
  f.hs_metadata = hs_.metadata_bytes();
  f.ls_vectors = ls_.vector_bytes();
  f.ls_mapping = ls_.mapping_bytes();
  f.ls_metadata = ls_.metadata_bytes();
  f.predicates = predicates_.stored_bytes();
  return f;
}

std::vector<std::uint8_t> VecFlowIndex::serialize() const {
  detail::ByteWriter w;
  w.put<std::uint32_t>(kIndexMagic);
  w.put<std::uint32_t>(kIndexVersion);
  w.put<std::uint64_t>(config_.threshold);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(config_.degree));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(config_.group_width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(config_.chunk_elems));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(config_.metric));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(vectors_.kind()));
  w.put<std::uint64_t>(vectors_.n_points());
  w.put<std::uint64_t>(vectors_.dim());
  w.put<std::uint64_t>(posting_.n_labels());

  {
    detail::ByteWriter p;
    p.put<std::uint64_t>(partition_.threshold);
    p.put_vector(partition_.hs_labels);
    p.put_vector(partition_.ls_labels);
    put_section(w, Section::kPartition, p.bytes());
  }
  {
    detail::ByteWriter v;
    v.put_vector(vectors_.data());
    put_section(w, Section::kVectors, v.bytes());
  }
  put_section(w, Section::kHs, serialize_hs_index(hs_));
  put_section(w, Section::kLs, serialize_ls_index(ls_));
  {
    detail::ByteWriter t;
    t.put_vector(predicates_.global_labels);
    t.put_vector(predicates_.label_offsets);
    t.put_vector(predicates_.label_counts);
    put_section(w, Section::kPredicates, t.bytes());
  }
  return std::move(w.bytes());
}

VecFlowIndex VecFlowIndex::deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kIndexMagic) throw FormatError("not a vecflow index file");
  const auto version = r.get<std::uint32_t>();
  if (version != kIndexVersion) {
    throw FormatError("unsupported index version " + std::to_string(version));
  }
  VecFlowIndex index;
  index.config_.threshold = r.get<std::uint64_t>();
  index.config_.degree = r.get<std::uint32_t>();
  index.config_.group_width = r.get<std::uint32_t>();
  index.config_.chunk_elems = r.get<std::uint32_t>();
  const auto metric = r.get<std::uint32_t>();
  const auto kind = r.get<std::uint32_t>();
  if (metric > 1 || kind > 1) throw FormatError("unknown metric or element kind in header");
  index.config_.metric = static_cast<Metric>(metric);
  const auto n_points = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint64_t>();
  const auto n_labels = r.get<std::uint64_t>();

  {
    detail::ByteReader p(get_section(r, bytes, Section::kPartition));
    index.partition_.threshold = p.get<std::uint64_t>();
    index.partition_.hs_labels = p.get_vector<Label>();
    index.partition_.ls_labels = p.get_vector<Label>();
  }
  {
    detail::ByteReader v(get_section(r, bytes, Section::kVectors));
    index.vectors_ = VectorDataset(n_points, dim, v.get_vector<float>(),
                                   static_cast<ElementKind>(kind));
  }
  index.hs_ = deserialize_hs_index(get_section(r, bytes, Section::kHs));
  index.ls_ = deserialize_ls_index(get_section(r, bytes, Section::kLs));
  {
    detail::ByteReader t(get_section(r, bytes, Section::kPredicates));
    index.predicates_.global_labels = t.get_vector<Label>();
    index.predicates_.label_offsets = t.get_vector<std::uint64_t>();
    index.predicates_.label_counts = t.get_vector<std::uint32_t>();
  }
  if (!r.done()) throw FormatError("trailing bytes after index sections");

  const auto& table = index.predicates_;
  if (table.n_points() != n_points || table.label_counts.size() != n_points) {
    throw FormatError("predicate table does not match the point count");
  }
  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < n_points; ++i) {
    if (table.label_offsets[i] != expected) throw FormatError("predicate offsets are not a prefix sum");
    expected += table.label_counts[i];
  }
  if (expected != table.global_labels.size()) throw FormatError("predicate table is truncated");

  index.posting_ = build_posting_lists(to_label_assignment(index.predicates_));
  if (index.posting_.n_labels() != n_labels ||
      partition_labels(index.posting_, index.partition_.threshold) != index.partition_ ||
      index.hs_.label_order != index.partition_.hs_labels ||
      index.ls_.label_order != index.partition_.ls_labels ||
      index.partition_.threshold != index.config_.threshold) {
    throw FormatError("index sections disagree with the stored label partition");
  }
  for (const PointId id : index.hs_.index_mapping) {
    if (id >= n_points) throw FormatError("HS mapping references a point out of range");
  }
  return index;
}

void VecFlowIndex::save(const std::filesystem::path& path) const {
  write_file_bytes(path, serialize());
}

VecFlowIndex VecFlowIndex::load(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

MemoryEstimate estimate_memory(const MemoryModel& m) {
  MemoryEstimate e;
  e.hs = estimate_hs_memory(m.n_points, m.dim, m.hs_labels_per_point, m.degree, m.element_bytes);
  e.ls = estimate_ls_memory(m.n_points, m.dim, m.ls_labels_per_point, m.element_bytes);
  e.total = e.hs + e.ls;
  e.mapping = m.n_points * m.labels_per_point * m.element_bytes;
  e.label_metadata = 2.0 * m.n_labels * m.element_bytes;
  e.single_index = m.n_points * (m.dim + m.single_index_degree) * m.element_bytes;
  return e;
}

MemoryModel memory_model_of(const VecFlowIndex& index) {
  MemoryModel m;
  const double n = static_cast<double>(index.vectors().n_points());
  m.n_points = n;
  m.dim = static_cast<double>(index.vectors().dim());
  double hs_entries = 0;
  for (const auto size : index.hs().label_sizes) hs_entries += size;
  double ls_entries = 0;
  for (const auto size : index.ls().label_sizes) ls_entries += size;
  m.hs_labels_per_point = n > 0 ? hs_entries / n : 0;
  m.ls_labels_per_point = n > 0 ? ls_entries / n : 0;
  m.labels_per_point = m.hs_labels_per_point + m.ls_labels_per_point;
  m.degree = index.config().degree;
  m.element_bytes = sizeof(float);
  m.n_labels = static_cast<double>(index.posting().n_labels());
  return m;
}

}  // namespace vecflow
