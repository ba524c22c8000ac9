#include "vecflow/label_ivf.hpp"

#include <algorithm>
#include <string>

#include "vecflow/error.hpp"

namespace vecflow {

PostingLists::PostingLists(std::size_t n_points, std::map<Label, std::vector<PointId>> lists)
    : n_points_(n_points), lists_(std::move(lists)) {}

const std::vector<PointId>* PostingLists::find(Label label) const {
  const auto it = lists_.find(label);
  return it == lists_.end() ? nullptr : &it->second;
}

const std::vector<PointId>& PostingLists::list(Label label) const {
  const auto* found = find(label);
  if (found == nullptr) throw LookupError("label " + std::to_string(label) + " is not indexed");
  return *found;
}

std::vector<Label> PostingLists::labels() const {
  std::vector<Label> out;
  out.reserve(lists_.size());
  for (const auto& [label, ids] : lists_) out.push_back(label);
  return out;
}

std::size_t PostingLists::total_entries() const {
  std::size_t total = 0;
  for (const auto& [label, ids] : lists_) total += ids.size();
  return total;
}

PostingLists build_posting_lists(const LabelAssignment& labels) {
  std::map<Label, std::vector<PointId>> lists;
  for (std::size_t i = 0; i < labels.n_points(); ++i) {
    for (const Label l : labels.labels(i)) lists[l].push_back(static_cast<PointId>(i));
  }
  // Ids are appended in increasing i, so every list is already sorted.
  return PostingLists(labels.n_points(), std::move(lists));
}

LabelAssignment to_label_assignment(const PostingLists& posting) {
  std::vector<std::vector<Label>> per_point(posting.n_points());
  for (const auto& [label, ids] : posting.lists()) {
    for (const PointId id : ids) per_point[id].push_back(label);
  }
  return LabelAssignment(std::move(per_point));
}

double specificity(const PostingLists& posting, Label label) {
  const auto& ids = posting.list(label);
  return static_cast<double>(ids.size()) / static_cast<double>(posting.n_points());
}

bool Partition::is_hs(Label label) const {
  return std::binary_search(hs_labels.begin(), hs_labels.end(), label);
}

bool Partition::is_ls(Label label) const {
  return std::binary_search(ls_labels.begin(), ls_labels.end(), label);
}

Partition partition_labels(const PostingLists& posting, std::uint64_t threshold) {
  Partition partition;
  partition.threshold = threshold;
  for (const auto& [label, ids] : posting.lists()) {
    if (ids.empty()) continue;
    if (ids.size() >= threshold) {
      partition.hs_labels.push_back(label);
    } else {
      partition.ls_labels.push_back(label);
    }
  }
  return partition;
}

Route route(const Partition& partition, const PostingLists& posting, Label label) {
  const auto* ids = posting.find(label);
  if (ids == nullptr || ids->empty()) return Route::kNotIndexed;
  return ids->size() >= partition.threshold ? Route::kGraph : Route::kBruteForce;
}

const char* to_string(Route r) {
  switch (r) {
    case Route::kGraph:
      return "graph";
    case Route::kBruteForce:
      return "brute-force";
    case Route::kNotIndexed:
      return "not-indexed";
  }
  return "unknown";
}

}  // namespace vecflow
