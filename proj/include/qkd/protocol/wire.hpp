#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qkd/protocol/messages.hpp"

namespace qkd::protocol {

// Frame layout (little-endian):
//   "QKD1" | version u8 | type u8 | payload length u32 | payload | CRC32(header + payload) u32
// Index lists are u64 arrays prefixed by a u64 count; bit sequences are a u64
// bit count followed by LSB-first packed bytes with zero padding.

inline constexpr std::array<std::uint8_t, 4> kMagic{'Q', 'K', 'D', '1'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderBytes = 10;
inline constexpr std::size_t kTrailerBytes = 4;
inline constexpr std::uint32_t kMaxPayloadBytes = 1U << 28;

enum class DecodeStatus : std::uint8_t { ok, need_more, corrupt };

enum class FrameError : std::uint8_t {
  none,
  bad_magic,
  bad_version,
  unknown_type,
  oversized,
  bad_checksum,
  malformed_payload,
};

std::string_view to_string(FrameError error);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::need_more;
  FrameError error = FrameError::none;
  /// Bytes taken by the frame when status == ok.
  std::size_t consumed = 0;
  std::optional<Message> message;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_frame(const Message& message);

/// Decodes the frame at the start of `bytes`. Never throws on malformed input.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace qkd::protocol
