#include "vecflow/types.hpp"

#include <algorithm>
#include <string>

#include "vecflow/error.hpp"

namespace vecflow {

VectorDataset::VectorDataset(std::size_t n_points, std::size_t dim, ElementKind kind)
    : VectorDataset(n_points, dim, std::vector<float>(n_points * dim, 0.0f), kind) {}

VectorDataset::VectorDataset(std::size_t n_points, std::size_t dim, std::vector<float> data,
                             ElementKind kind)
    : n_points_(n_points), dim_(dim), kind_(kind), data_(std::move(data)) {
  if (dim_ == 0) throw ParameterError("dataset dimension must be at least 1");
  if (data_.size() != n_points_ * dim_) {
    throw ParameterError("dataset buffer holds " + std::to_string(data_.size()) +
                         " elements, expected " + std::to_string(n_points_ * dim_));
  }
}

LabelAssignment::LabelAssignment(std::vector<std::vector<Label>> per_point)
    : lists_(std::move(per_point)) {
  for (auto& list : lists_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

std::size_t LabelAssignment::total_entries() const {
  std::size_t total = 0;
  for (const auto& list : lists_) total += list.size();
  return total;
}

double LabelAssignment::mean_labels_per_point() const {
  if (lists_.empty()) return 0.0;
  return static_cast<double>(total_entries()) / static_cast<double>(lists_.size());
}

std::vector<Label> LabelAssignment::universe() const {
  std::vector<Label> all;
  all.reserve(total_entries());
  for (const auto& list : lists_) all.insert(all.end(), list.begin(), list.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::vector<PointId> TopKResult::ids() const {
  std::vector<PointId> out;
  out.reserve(hits.size());
  for (const Hit& h : hits) out.push_back(h.id);
  return out;
}

}  // namespace vecflow
