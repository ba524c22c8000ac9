#pragma once

#include <cstddef>
#include <cstring>
#include <span>

#include "vecflow/types.hpp"

namespace vecflow {

// Every distance in the library is accumulated in the same fixed order:
// element d goes into lane d % kDistanceLanes (in increasing d), and the
// lanes are reduced pairwise. Any code path that reproduces this order
// (row-major or interleaved) yields bit-identical distances.
inline constexpr std::size_t kDistanceLanes = 8;

struct LaneAccumulator {
  float lane[kDistanceLanes] = {};

  float reduce() const {
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
           ((lane[4] + lane[5]) + (lane[6] + lane[7]));
  }
};

namespace detail {

#if defined(__GNUC__)
#define VECFLOW_VECTOR_EXT 1
// Four float lanes; element-wise ops keep each lane's rounding identical to
// the scalar loop.
typedef float Float4 __attribute__((vector_size(16)));

inline Float4 load4(const float* p) {
  Float4 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store4(float* p, Float4 v) { std::memcpy(p, &v, sizeof(v)); }

template <Metric M>
inline Float4 term4(Float4 q, Float4 x) {
  if constexpr (M == Metric::kL2) {
    const Float4 diff = q - x;
    return diff * diff;
  } else {
    return q * x;
  }
}
#endif

template <Metric M>
inline float term(float q, float x) {
  if constexpr (M == Metric::kL2) {
    const float diff = q - x;
    return diff * diff;
  } else {
    return q * x;
  }
}

// Sum of per-element terms in lane order.
template <Metric M>
inline float accumulate_row(const float* a, const float* b, std::size_t dim) {
  LaneAccumulator acc;
  std::size_t d = 0;
#ifdef VECFLOW_VECTOR_EXT
  Float4 lo = {0, 0, 0, 0};
  Float4 hi = {0, 0, 0, 0};
  for (; d + kDistanceLanes <= dim; d += kDistanceLanes) {
    lo += term4<M>(load4(a + d), load4(b + d));
    hi += term4<M>(load4(a + d + 4), load4(b + d + 4));
  }
  store4(acc.lane, lo);
  store4(acc.lane + 4, hi);
#else
  for (; d + kDistanceLanes <= dim; d += kDistanceLanes) {
    for (std::size_t j = 0; j < kDistanceLanes; ++j) acc.lane[j] += term<M>(a[d + j], b[d + j]);
  }
#endif
  for (std::size_t j = 0; d < dim; ++d, ++j) acc.lane[j] += term<M>(a[d], b[d]);
  return acc.reduce();
}

}  // namespace detail

inline float l2_squared(const float* a, const float* b, std::size_t dim) {
  return detail::accumulate_row<Metric::kL2>(a, b, dim);
}

inline float dot(const float* a, const float* b, std::size_t dim) {
  return detail::accumulate_row<Metric::kInnerProduct>(a, b, dim);
}

inline float distance(Metric metric, const float* a, const float* b, std::size_t dim) {
  return metric == Metric::kL2 ? l2_squared(a, b, dim) : -dot(a, b, dim);
}

inline float distance(Metric metric, std::span<const float> a, std::span<const float> b) {
  return distance(metric, a.data(), b.data(), a.size());
}

// Per-element contribution, for scans that visit elements out of row order.
inline float distance_term(Metric metric, float q, float x) {
  if (metric == Metric::kL2) {
    const float diff = q - x;
    return diff * diff;
  }
  return q * x;
}

inline float finish_distance(Metric metric, const LaneAccumulator& acc) {
  return metric == Metric::kL2 ? acc.reduce() : -acc.reduce();
}

}  // namespace vecflow
