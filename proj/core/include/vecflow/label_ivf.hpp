#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "vecflow/types.hpp"

namespace vecflow {

// Label-centric inverted file: label -> ascending global point ids.
class PostingLists {
 public:
  PostingLists() = default;
  PostingLists(std::size_t n_points, std::map<Label, std::vector<PointId>> lists);

  std::size_t n_points() const { return n_points_; }
  std::size_t n_labels() const { return lists_.size(); }

  // nullptr when the label has no posting list.
  const std::vector<PointId>* find(Label label) const;
  // Throws LookupError for unknown labels.
  const std::vector<PointId>& list(Label label) const;
  std::size_t size_of(Label label) const { return list(label).size(); }

  std::vector<Label> labels() const;
  const std::map<Label, std::vector<PointId>>& lists() const { return lists_; }

  std::size_t total_entries() const;

  friend bool operator==(const PostingLists&, const PostingLists&) = default;

 private:
  std::size_t n_points_ = 0;
  std::map<Label, std::vector<PointId>> lists_;
};

PostingLists build_posting_lists(const LabelAssignment& labels);

// Inverse of build_posting_lists.
LabelAssignment to_label_assignment(const PostingLists& posting);

// |C_l| / N.
double specificity(const PostingLists& posting, Label label);

// Threshold value that sends every label to the brute-force side.
inline constexpr std::uint64_t kUnboundedThreshold = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kDefaultThreshold = 2000;

struct Partition {
  std::uint64_t threshold = kDefaultThreshold;
  std::vector<Label> hs_labels;  // |C_l| >= threshold
  std::vector<Label> ls_labels;  // 0 < |C_l| < threshold

  bool is_hs(Label label) const;
  bool is_ls(Label label) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

Partition partition_labels(const PostingLists& posting, std::uint64_t threshold);

enum class Route {
  kGraph,
  kBruteForce,
  kNotIndexed,
};

// Graph search iff |C_l| >= T; labels without a posting list are not indexed.
Route route(const Partition& partition, const PostingLists& posting, Label label);

const char* to_string(Route route);

}  // namespace vecflow
