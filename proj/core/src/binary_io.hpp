#pragma once

// Little-endian fixed-width encoding shared by the vecs readers and the
// index container.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "vecflow/error.hpp"

namespace vecflow::detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(bits & 0xFF));
      if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
    }
  }

  template <typename T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* raw = reinterpret_cast<const std::uint8_t*>(values.data());
      bytes_.insert(bytes_.end(), raw, raw + values.size_bytes());
    } else {
      for (const T& v : values) put(v);
    }
  }

  // Length-prefixed (uint64 count) array.
  template <typename T>
  void put_vector(const std::vector<T>& values) {
    put<std::uint64_t>(values.size());
    put_array(std::span<const T>(values));
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }
  bool done() const { return offset_ == bytes_.size(); }

  void skip(std::size_t n) {
    require(n);
    offset_ += n;
  }

  template <typename T>
  T get() {
    require(sizeof(T));
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits = static_cast<U>(bits | (static_cast<U>(bytes_[offset_ + i]) << (8 * i)));
    }
    offset_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  template <typename T>
  void get_array(std::span<T> out) {
    require(out.size_bytes());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), bytes_.data() + offset_, out.size_bytes());
      offset_ += out.size_bytes();
    } else {
      for (T& v : out) v = get<T>();
    }
  }

  template <typename T>
  std::vector<T> get_vector() {
    const auto count = get<std::uint64_t>();
    if (count > remaining() / sizeof(T)) {
      throw FormatError("array of " + std::to_string(count) + " elements at byte offset " +
                        std::to_string(offset_) + " exceeds the remaining input");
    }
    std::vector<T> out(count);
    get_array(std::span<T>(out));
    return out;
  }

 private:
  void require(std::size_t n) const {
    if (n > remaining()) {
      throw FormatError("unexpected end of input at byte offset " + std::to_string(offset_) +
                        " (need " + std::to_string(n) + " bytes, have " +
                        std::to_string(remaining()) + ")");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

}  // namespace vecflow::detail
