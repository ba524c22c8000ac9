#include "vecflow/multilabel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

#include "vecflow/error.hpp"

namespace vecflow {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<Label> sorted_unique(std::vector<Label> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

std::vector<Label> without(std::span<const Label> labels, Label removed) {
  std::vector<Label> rest;
  rest.reserve(labels.size());
  for (const Label l : labels) {
    if (l != removed) rest.push_back(l);
  }
  return rest;
}

// Routed search restricted to points carrying every label in `required`.
TopKResult filtered_branch(const IndexView& index, std::span<const float> query, Label label,
                           std::span<const Label> required, const SearchParams& params,
                           std::uint64_t query_ordinal) {
  if (required.empty()) return search_single(index, query, label, params, query_ordinal);
  const PredicateTable& table = *index.predicates;
  auto keep = [&](PointId id) { return verify(table, id, required); };
  return search_single(index, query, label, params, query_ordinal, keep);
}

}  // namespace

std::span<const Label> PredicateTable::labels_of(PointId point) const {
  if (point >= n_points()) {
    throw LookupError("point " + std::to_string(point) + " is outside the predicate table (" +
                      std::to_string(n_points()) + " points)");
  }
  return std::span<const Label>(global_labels).subspan(label_offsets[point], label_counts[point]);
}

std::size_t PredicateTable::stored_bytes() const {
  return global_labels.capacity() * sizeof(Label) +
         label_offsets.capacity() * sizeof(std::uint64_t) +
         label_counts.capacity() * sizeof(std::uint32_t);
}

PredicateTable build_predicate_table(const LabelAssignment& labels) {
  PredicateTable table;
  table.global_labels.reserve(labels.total_entries());
  table.label_offsets.reserve(labels.n_points());
  table.label_counts.reserve(labels.n_points());
  for (std::size_t i = 0; i < labels.n_points(); ++i) {
    const auto list = labels.labels(i);
    table.label_offsets.push_back(table.global_labels.size());
    table.label_counts.push_back(static_cast<std::uint32_t>(list.size()));
    table.global_labels.insert(table.global_labels.end(), list.begin(), list.end());
  }
  return table;
}

LabelAssignment to_label_assignment(const PredicateTable& table) {
  std::vector<std::vector<Label>> lists(table.n_points());
  for (std::size_t i = 0; i < table.n_points(); ++i) {
    const auto seg = table.labels_of(static_cast<PointId>(i));
    lists[i].assign(seg.begin(), seg.end());
  }
  return LabelAssignment(std::move(lists));
}

bool verify(const PredicateTable& table, PointId point, std::span<const Label> query_labels,
            VerifyTrace* trace) {
  if (query_labels.empty()) throw ParameterError("verify needs at least one query label");
  const auto seg = table.labels_of(point);
  const auto begin = seg.begin();
  const auto end = seg.end();

  const auto lo = std::lower_bound(begin, end, query_labels.front());
  if (lo == end || *lo != query_labels.front()) return false;
  if (trace != nullptr) {
    trace->smallest_at = static_cast<std::size_t>(lo - begin);
    trace->middle_ranges.clear();
  }
  if (query_labels.size() == 1) {
    if (trace != nullptr) trace->largest_at = trace->smallest_at;
    return true;
  }

  const auto hi = std::lower_bound(lo + 1, end, query_labels.back());
  if (hi == end || *hi != query_labels.back()) return false;
  if (trace != nullptr) trace->largest_at = static_cast<std::size_t>(hi - begin);

  for (std::size_t j = 1; j + 1 < query_labels.size(); ++j) {
    if (trace != nullptr) {
      trace->middle_ranges.emplace_back(static_cast<std::size_t>(lo + 1 - begin),
                                        static_cast<std::size_t>(hi - begin));
    }
    if (!std::binary_search(lo + 1, hi, query_labels[j])) return false;
  }
  return true;
}

const char* to_string(LabelOp op) {
  switch (op) {
    case LabelOp::kSingle:
      return "single";
    case LabelOp::kOr:
      return "or";
    case LabelOp::kAnd:
      return "and";
  }
  return "unknown";
}

const char* to_string(AndPolicy policy) {
  return policy == AndPolicy::kGreedy ? "greedy" : "parallel";
}

LabelQuery LabelQuery::single(Label label) { return {{label}, LabelOp::kSingle, AndPolicy::kGreedy}; }

LabelQuery LabelQuery::any_of(std::vector<Label> labels) {
  return {sorted_unique(std::move(labels)), LabelOp::kOr, AndPolicy::kGreedy};
}

LabelQuery LabelQuery::all_of(std::vector<Label> labels, AndPolicy policy) {
  return {sorted_unique(std::move(labels)), LabelOp::kAnd, policy};
}

LabelQuery parse_label_expression(std::string_view text) {
  const std::string_view expr = trim(text);
  const bool has_or = expr.find('|') != std::string_view::npos;
  const bool has_and = expr.find('&') != std::string_view::npos;
  if (has_or && has_and) {
    throw ParseError("label expression '" + std::string(expr) + "' mixes '|' and '&'");
  }
  const char sep = has_or ? '|' : '&';
  std::vector<Label> labels;
  std::string_view rest = expr;
  while (true) {
    const auto pos = rest.find(sep);
    const std::string_view token = trim(rest.substr(0, pos));
    Label value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError("invalid label '" + std::string(token) + "' in expression '" +
                       std::string(expr) + "'");
    }
    labels.push_back(value);
    if (pos == std::string_view::npos) break;
    rest = rest.substr(pos + 1);
  }
  if (labels.size() == 1 && !has_or && !has_and) return LabelQuery::single(labels.front());
  return has_or ? LabelQuery::any_of(std::move(labels)) : LabelQuery::all_of(std::move(labels));
}

std::string format_label_expression(const LabelQuery& query) {
  const char* sep = query.op == LabelOp::kAnd ? " & " : " | ";
  std::string out;
  for (std::size_t i = 0; i < query.labels.size(); ++i) {
    if (i > 0) out += sep;
    out += std::to_string(query.labels[i]);
  }
  return out;
}

std::vector<LabelQuery> read_query_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query label file " + path.string());
  std::vector<LabelQuery> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      queries.push_back(parse_label_expression(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return queries;
}

void write_query_labels(const std::filesystem::path& path, std::span<const LabelQuery> queries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create query label file " + path.string());
  for (const auto& q : queries) out << format_label_expression(q) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

TopKResult merge_topk(std::span<const TopKResult> lists, std::size_t k) {
  TopKResult merged;
  std::size_t total = 0;
  for (const auto& list : lists) {
    total += list.hits.size();
    merged.not_indexed = merged.not_indexed || list.not_indexed;
  }
  std::vector<Hit> all;
  all.reserve(total);
  for (const auto& list : lists) all.insert(all.end(), list.hits.begin(), list.hits.end());
  std::sort(all.begin(), all.end(), hit_less);

  std::unordered_map<PointId, bool> taken;
  taken.reserve(std::min(total, 2 * k + 1));
  for (const Hit& h : all) {
    if (merged.hits.size() == k) break;
    // The first occurrence of an id in canonical order has its smallest distance.
    if (taken.emplace(h.id, true).second) merged.hits.push_back(h);
  }
  return merged;
}

TopKResult search_single(const IndexView& index, std::span<const float> query, Label label,
                         const SearchParams& params, std::uint64_t query_ordinal,
                         PointFilter filter) {
  switch (route(*index.partition, *index.posting, label)) {
    case Route::kGraph:
      return graph_search(*index.hs, *index.vectors, query, label, params, query_ordinal,
                          filter);
    case Route::kBruteForce:
      return bfs_search(*index.ls, query, label, params.k, filter);
    case Route::kNotIndexed:
      break;
  }
  TopKResult empty;
  empty.not_indexed = true;
  return empty;
}

TopKResult search_or(const IndexView& index, std::span<const float> query,
                     std::span<const Label> labels, const SearchParams& params,
                     std::uint64_t query_ordinal) {
  if (labels.empty()) throw ParameterError("OR query needs at least one label");
  if (labels.size() == 1) return search_single(index, query, labels.front(), params, query_ordinal);
  std::vector<TopKResult> branches;
  branches.reserve(labels.size());
  for (const Label l : labels) {
    branches.push_back(search_single(index, query, l, params, query_ordinal));
  }
  return merge_topk(branches, params.k);
}

Label select_greedy_label(const PostingLists& posting, std::span<const Label> labels) {
  if (labels.empty()) throw ParameterError("AND query needs at least one label");
  Label best = labels.front();
  std::size_t best_size = posting.size_of(best);
  for (const Label l : labels.subspan(1)) {
    const std::size_t size = posting.size_of(l);
    if (size < best_size || (size == best_size && l < best)) {
      best = l;
      best_size = size;
    }
  }
  return best;
}

namespace {

bool any_not_indexed(const IndexView& index, std::span<const Label> labels) {
  return std::any_of(labels.begin(), labels.end(), [&](Label l) {
    const auto* ids = index.posting->find(l);
    return ids == nullptr || ids->empty();
  });
}

TopKResult not_indexed_result() {
  TopKResult r;
  r.not_indexed = true;
  return r;
}

}  // namespace

TopKResult search_and_greedy(const IndexView& index, std::span<const float> query,
                             std::span<const Label> labels, const SearchParams& params,
                             std::uint64_t query_ordinal) {
  if (labels.empty()) throw ParameterError("AND query needs at least one label");
  if (any_not_indexed(index, labels)) return not_indexed_result();
  const auto sorted = sorted_unique({labels.begin(), labels.end()});
  labels = sorted;
  const Label chosen = select_greedy_label(*index.posting, labels);
  const auto rest = without(labels, chosen);
  return filtered_branch(index, query, chosen, rest, params, query_ordinal);
}

TopKResult search_and_parallel(const IndexView& index, std::span<const float> query,
                               std::span<const Label> labels, const SearchParams& params,
                               std::uint64_t query_ordinal) {
  if (labels.empty()) throw ParameterError("AND query needs at least one label");
  if (any_not_indexed(index, labels)) return not_indexed_result();
  const auto sorted = sorted_unique({labels.begin(), labels.end()});
  labels = sorted;
  std::vector<TopKResult> branches;
  branches.reserve(labels.size());
  for (const Label l : labels) {
    const auto rest = without(labels, l);
    branches.push_back(filtered_branch(index, query, l, rest, params, query_ordinal));
  }
  return merge_topk(branches, params.k);
}

}  // namespace vecflow
