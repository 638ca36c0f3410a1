#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "fids/federation/codec.hpp"

namespace fids::federation {

enum class MessageType : std::uint8_t { ModelUpdate = 1, GlobalModel = 2, Ack = 3, Shutdown = 4 };

struct ModelEnvelope {
  MessageType type = MessageType::Ack;
  std::uint32_t device_id = 0;
  std::uint32_t round = 0;
  Bytes payload;

  bool operator==(const ModelEnvelope&) const = default;
};

class BadMagic : public DecodeError {
 public:
  using DecodeError::DecodeError;
};
class CrcMismatch : public DecodeError {
 public:
  using DecodeError::DecodeError;
};
class UnknownMessageType : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'F', 'I', 'D', 'S'};
inline constexpr std::uint16_t kFrameVersion = 1;
// magic + version + type + device + round + payload length
inline constexpr std::size_t kFrameHeaderSize = 4 + 2 + 1 + 4 + 4 + 8;
inline constexpr std::size_t kFrameTrailerSize = 4;
inline constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 32;

/// CRC-32 (IEEE 802.3, reflected, init and xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> data);

/// magic "FIDS" | version u16 | type u8 | device u32 | round u32 |
/// payload length u64 | payload | crc32(payload) u32, big-endian.
Bytes encode_frame(const ModelEnvelope& env);

/// Decodes exactly one frame occupying all of `frame`.
ModelEnvelope decode_frame(std::span<const std::uint8_t> frame);

/// Total frame size announced by a header; validates magic, version and type.
std::size_t frame_size(std::span<const std::uint8_t, kFrameHeaderSize> header);

}  // namespace fids::federation
