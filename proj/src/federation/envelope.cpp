#include "fids/federation/envelope.hpp"

#include <algorithm>
#include <string>

#include <boost/crc.hpp>

namespace fids::federation {

namespace {

struct Header {
  MessageType type;
  std::uint32_t device_id;
  std::uint32_t round;
  std::uint64_t payload_len;
};

Header read_header(ByteReader& in) {
  const auto magic = in.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kFrameMagic.begin())) throw BadMagic("frame magic is not FIDS");
  const std::uint16_t version = in.u16();
  if (version != kFrameVersion) throw VersionMismatch("frame version " + std::to_string(version) + " is not supported");
  const std::uint8_t type = in.u8();
  if (type < 1 || type > 4) throw UnknownMessageType("unknown message type " + std::to_string(type));
  Header h{static_cast<MessageType>(type), in.u32(), in.u32(), in.u64()};
  if (h.payload_len > kMaxPayload) throw DecodeError("frame payload too large");
  const bool control = h.type == MessageType::Ack || h.type == MessageType::Shutdown;
  if (control && h.payload_len != 0) throw DecodeError("control frames carry no payload");
  return h;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  boost::crc_32_type crc;
  crc.process_bytes(data.data(), data.size());
  return crc.checksum();
}

Bytes encode_frame(const ModelEnvelope& env) {
  ByteWriter out;
  out.bytes(kFrameMagic);
  out.u16(kFrameVersion);
  out.u8(static_cast<std::uint8_t>(env.type));
  out.u32(env.device_id);
  out.u32(env.round);
  out.u64(env.payload.size());
  out.bytes(env.payload);
  out.u32(crc32(env.payload));
  return out.take();
}

ModelEnvelope decode_frame(std::span<const std::uint8_t> frame) {
  // A short buffer that already disagrees with the magic is a magic error, not truncation.
  const std::size_t probe = std::min<std::size_t>(frame.size(), kFrameMagic.size());
  if (!std::equal(frame.begin(), frame.begin() + static_cast<std::ptrdiff_t>(probe), kFrameMagic.begin())) {
    throw BadMagic("frame magic is not FIDS");
  }
  ByteReader in(frame);
  const Header h = read_header(in);
  ModelEnvelope env{h.type, h.device_id, h.round, {}};
  const auto payload = in.bytes(static_cast<std::size_t>(h.payload_len));
  const std::uint32_t expected = in.u32();
  if (!in.done()) throw DecodeError("trailing bytes after frame");
  if (crc32(payload) != expected) throw CrcMismatch("frame payload CRC mismatch");
  env.payload.assign(payload.begin(), payload.end());
  return env;
}

std::size_t frame_size(std::span<const std::uint8_t, kFrameHeaderSize> header) {
  ByteReader in(header);
  const Header h = read_header(in);
  return kFrameHeaderSize + static_cast<std::size_t>(h.payload_len) + kFrameTrailerSize;
}

}  // namespace fids::federation
