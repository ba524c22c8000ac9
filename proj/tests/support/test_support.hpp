#pragma once

// Small fixtures and naive reference implementations shared by the tests.
// The references deliberately avoid the library's search code paths.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "vecflow/distance.hpp"
#include "vecflow/types.hpp"

namespace vecflow::testing {

inline VectorDataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> data(n * dim);
  for (auto& x : data) x = normal(gen);
  return VectorDataset(n, dim, std::move(data));
}

// Each point gets each label in [0, n_labels) with probability p; empty
// lists are allowed.
inline LabelAssignment random_labels(std::size_t n, std::size_t n_labels, double p,
                                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::vector<Label>> lists(n);
  for (auto& list : lists) {
    for (Label l = 0; l < n_labels; ++l) {
      if (coin(gen)) list.push_back(l);
    }
  }
  return LabelAssignment(std::move(lists));
}

inline bool naive_subset(std::span<const Label> point, std::span<const Label> query) {
  for (const Label q : query) {
    if (std::find(point.begin(), point.end(), q) == point.end()) return false;
  }
  return true;
}

inline bool naive_any(std::span<const Label> point, std::span<const Label> query) {
  for (const Label q : query) {
    if (std::find(point.begin(), point.end(), q) != point.end()) return true;
  }
  return false;
}

// Exhaustive top-k over the given candidate ids, canonical order.
inline std::vector<Hit> naive_topk(const VectorDataset& data, std::span<const float> query,
                                   const std::vector<PointId>& candidates, std::size_t k,
                                   Metric metric = Metric::kL2) {
  std::vector<Hit> hits;
  for (const PointId id : candidates) hits.push_back({id, distance(metric, query, data.row(id))});
  std::sort(hits.begin(), hits.end(), hit_less);
  if (hits.size() > k) hits.resize(k);
  return hits;
}

}  // namespace vecflow::testing
