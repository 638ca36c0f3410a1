#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fids/error.hpp"
#include "fids/gbdt.hpp"

namespace fids::federation {

using Bytes = std::vector<std::uint8_t>;

class DecodeError : public DataError {
 public:
  using DataError::DataError;
};
class TruncatedInput : public DecodeError {
 public:
  using DecodeError::DecodeError;
};
class BadNodeTag : public DecodeError {
 public:
  using DecodeError::DecodeError;
};
class VersionMismatch : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

/// Big-endian primitive writer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  Bytes take() { return std::move(out_); }
  std::size_t size() const noexcept { return out_.size(); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

/// Big-endian primitive reader; every short read throws TruncatedInput.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64();
  std::span<const std::uint8_t> bytes(std::size_t n);

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }

 private:
  std::uint64_t get(std::size_t width);
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Canonical model encoding, all integers big-endian:
///   format version u16
///   n_classes u32, n_features u32, depth u32, iterations u32,
///   learning_rate f64, l2_leaf_reg f64, seed u64, base_scores K x f64
///   trees in (iteration, class) order, each in pre-order:
///     tag u8 (0 internal, 1 leaf); internal: feature u32 + threshold f64; leaf: value f64
Bytes serialize_model(const gbdt::GbdtModel& model);
gbdt::GbdtModel deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace fids::federation
