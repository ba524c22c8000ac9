#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vecflow/hs_graph.hpp"
#include "vecflow/label_ivf.hpp"
#include "vecflow/ls_bfs.hpp"
#include "vecflow/types.hpp"

namespace vecflow {

// Flat per-point label storage: point i owns
// global_labels[label_offsets[i] .. label_offsets[i] + label_counts[i]),
// sorted ascending.
struct PredicateTable {
  std::vector<Label> global_labels;
  std::vector<std::uint64_t> label_offsets;
  std::vector<std::uint32_t> label_counts;

  std::size_t n_points() const { return label_offsets.size(); }
  std::span<const Label> labels_of(PointId point) const;
  std::size_t stored_bytes() const;

  friend bool operator==(const PredicateTable&, const PredicateTable&) = default;
};

PredicateTable build_predicate_table(const LabelAssignment& labels);
LabelAssignment to_label_assignment(const PredicateTable& table);

// Positions touched by verify, relative to the point's segment.
struct VerifyTrace {
  std::size_t smallest_at = 0;
  std::size_t largest_at = 0;
  // Half-open [begin, end) range searched for each middle label.
  std::vector<std::pair<std::size_t, std::size_t>> middle_ranges;
};

// True iff every label of `query_labels` (sorted ascending, non-empty)
// belongs to the point. Binary-searches the smallest and largest query
// labels first, then looks for the rest only between those two hits.
bool verify(const PredicateTable& table, PointId point, std::span<const Label> query_labels,
            VerifyTrace* trace = nullptr);

enum class LabelOp { kSingle, kOr, kAnd };
enum class AndPolicy { kGreedy, kParallel };

const char* to_string(LabelOp op);
const char* to_string(AndPolicy policy);

struct LabelQuery {
  std::vector<Label> labels;  // sorted ascending, duplicate free
  LabelOp op = LabelOp::kSingle;
  AndPolicy policy = AndPolicy::kGreedy;

  static LabelQuery single(Label label);
  static LabelQuery any_of(std::vector<Label> labels);
  static LabelQuery all_of(std::vector<Label> labels, AndPolicy policy = AndPolicy::kGreedy);

  friend bool operator==(const LabelQuery&, const LabelQuery&) = default;
};

// "7", "3 | 9 | 12" or "3 & 9". Mixed operators are rejected.
LabelQuery parse_label_expression(std::string_view text);
std::string format_label_expression(const LabelQuery& query);
std::vector<LabelQuery> read_query_labels(const std::filesystem::path& path);
void write_query_labels(const std::filesystem::path& path, std::span<const LabelQuery> queries);

// Union of sorted candidate lists: one entry per id (smallest distance
// kept), canonical order, truncated to k.
TopKResult merge_topk(std::span<const TopKResult> lists, std::size_t k);

// Borrowed view of every structure a query needs.
struct IndexView {
  const VectorDataset* vectors = nullptr;
  const PostingLists* posting = nullptr;
  const Partition* partition = nullptr;
  const HSIndex* hs = nullptr;
  const LSIndex* ls = nullptr;
  const PredicateTable* predicates = nullptr;
};

// Routed single-label search: graph for HS labels, scan for LS labels,
// empty `not_indexed` result otherwise.
TopKResult search_single(const IndexView& index, std::span<const float> query, Label label,
                         const SearchParams& params, std::uint64_t query_ordinal = 0,
                         PointFilter filter = {});

TopKResult search_or(const IndexView& index, std::span<const float> query,
                     std::span<const Label> labels, const SearchParams& params,
                     std::uint64_t query_ordinal = 0);

// Searches only the list of the least frequent label (ties: smaller id),
// keeping candidates that carry every other query label.
TopKResult search_and_greedy(const IndexView& index, std::span<const float> query,
                             std::span<const Label> labels, const SearchParams& params,
                             std::uint64_t query_ordinal = 0);

// One filtered search per query label, merged.
TopKResult search_and_parallel(const IndexView& index, std::span<const float> query,
                               std::span<const Label> labels, const SearchParams& params,
                               std::uint64_t query_ordinal = 0);

// Least frequent label of an AND query; labels must all be indexed.
Label select_greedy_label(const PostingLists& posting, std::span<const Label> labels);

}  // namespace vecflow
