#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace vecflow {

using PointId = std::uint32_t;
using Label = std::uint32_t;

inline constexpr PointId kInvalidPoint = std::numeric_limits<PointId>::max();

enum class Metric : std::uint32_t {
  kL2 = 0,            // squared euclidean
  kInnerProduct = 1,  // negated dot product, smaller is closer
};

enum class ElementKind : std::uint32_t {
  kFloat32 = 0,
  kUint8 = 1,
};

inline std::size_t element_bytes(ElementKind kind) {
  return kind == ElementKind::kFloat32 ? 4 : 1;
}

// Row-major point set. uint8 inputs are widened to float on load; `kind`
// remembers the on-disk element type so files round-trip.
class VectorDataset {
 public:
  VectorDataset() = default;
  VectorDataset(std::size_t n_points, std::size_t dim,
                ElementKind kind = ElementKind::kFloat32);
  VectorDataset(std::size_t n_points, std::size_t dim, std::vector<float> data,
                ElementKind kind = ElementKind::kFloat32);

  std::size_t n_points() const { return n_points_; }
  std::size_t dim() const { return dim_; }
  ElementKind kind() const { return kind_; }
  bool empty() const { return n_points_ == 0; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  // Bytes held by the element buffer.
  std::size_t stored_bytes() const { return data_.capacity() * sizeof(float); }

  friend bool operator==(const VectorDataset&, const VectorDataset&) = default;

 private:
  std::size_t n_points_ = 0;
  std::size_t dim_ = 0;
  ElementKind kind_ = ElementKind::kFloat32;
  std::vector<float> data_;
};

// Per-point label lists, each strictly ascending.
class LabelAssignment {
 public:
  LabelAssignment() = default;
  // Sorts and deduplicates every list.
  explicit LabelAssignment(std::vector<std::vector<Label>> per_point);

  std::size_t n_points() const { return lists_.size(); }
  std::span<const Label> labels(std::size_t i) const { return lists_[i]; }
  const std::vector<std::vector<Label>>& lists() const { return lists_; }

  std::size_t total_entries() const;
  double mean_labels_per_point() const;
  // Distinct label identifiers present, ascending.
  std::vector<Label> universe() const;

  friend bool operator==(const LabelAssignment&, const LabelAssignment&) = default;

 private:
  std::vector<std::vector<Label>> lists_;
};

struct Hit {
  PointId id = kInvalidPoint;
  float distance = 0.0f;

  friend bool operator==(const Hit&, const Hit&) = default;
};

// Canonical result order: distance ascending, then id ascending.
inline bool hit_less(const Hit& a, const Hit& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

struct TopKResult {
  std::vector<Hit> hits;
  // Set when a queried label has no posting list.
  bool not_indexed = false;

  std::size_t size() const { return hits.size(); }
  std::vector<PointId> ids() const;

  friend bool operator==(const TopKResult&, const TopKResult&) = default;
};

// Non-owning callable reference; cheap to pass by value into hot loops.
template <typename Signature>
class FunctionRef;

template <typename R, typename... Args>
class FunctionRef<R(Args...)> {
 public:
  FunctionRef() = default;

  template <typename F,
            typename = std::enable_if_t<!std::is_same_v<std::decay_t<F>, FunctionRef>>>
  FunctionRef(F&& f)  // NOLINT(google-explicit-constructor)
      : object_(const_cast<void*>(static_cast<const void*>(std::addressof(f)))),
        invoke_([](void* object, Args... args) -> R {
          return (*static_cast<std::add_pointer_t<std::remove_reference_t<F>>>(object))(
              std::forward<Args>(args)...);
        }) {}

  explicit operator bool() const { return invoke_ != nullptr; }

  R operator()(Args... args) const { return invoke_(object_, std::forward<Args>(args)...); }

 private:
  void* object_ = nullptr;
  R (*invoke_)(void*, Args...) = nullptr;
};

// Optional per-point acceptance test; an empty filter accepts everything.
using PointFilter = FunctionRef<bool(PointId)>;

}  // namespace vecflow
