#include "qkd/protocol/wire.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <limits>

namespace qkd::protocol {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

  void indices(const std::vector<std::uint64_t>& values) {
    u64(values.size());
    for (std::uint64_t v : values) u64(v);
  }

  template <typename Bits>
  void packed(const Bits& bits, std::size_t count) {
    u64(count);
    std::uint8_t current = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (bits(i)) current |= static_cast<std::uint8_t>(1U << (i % 8));
      if (i % 8 == 7) {
        u8(current);
        current = 0;
      }
    }
    if (count % 8 != 0) u8(current);
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

struct Malformed {};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() { return le<std::uint16_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

  std::vector<std::uint64_t> indices() {
    const std::uint64_t n = u64();
    if (n > remaining() / 8) throw Malformed{};
    std::vector<std::uint64_t> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = u64();
    return out;
  }

  /// Unpacks a counted bit sequence; padding bits must be zero.
  std::vector<std::uint8_t> packed() {
    const std::uint64_t n = u64();
    const std::uint64_t byte_count = n / 8 + (n % 8 != 0 ? 1 : 0);
    if (byte_count > remaining()) throw Malformed{};
    const auto raw = take(static_cast<std::size_t>(byte_count));
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (raw[i / 8] >> (i % 8)) & 1U;
    if (n % 8 != 0 && (raw.back() >> (n % 8)) != 0) throw Malformed{};
    return bits;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw Malformed{};
  }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) throw Malformed{};
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename T>
  T le() {
    const auto raw = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(raw[i]) << (8 * i));
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put(Writer& w, const Hello& m) {
  w.u8(static_cast<std::uint8_t>(m.role));
  w.u64(m.session_id);
  w.u64(m.scenario_hash);
}
void put(Writer& w, const SessionParams& m) {
  w.u64(m.session_id);
  w.u64(m.n_pulses);
  w.f64(m.qber_abort_threshold);
  w.u8(m.sample_fraction ? 1 : 0);
  w.f64(m.sample_fraction.value_or(1.0));
  w.u64(m.rng_seed);
}
void put(Writer& w, const DetectionReport& m) {
  w.indices(m.pulse_indices);
  w.packed([&](std::size_t i) { return m.bases[i] == Basis::diagonal; }, m.bases.size());
}
void put(Writer& w, const MatchMask& m) {
  w.packed([&](std::size_t i) { return m.keep[i] != 0; }, m.keep.size());
}
void put(Writer& w, const SampleIndices& m) { w.indices(m.positions); }
void put(Writer& w, const SampleBits& m) {
  w.packed([&](std::size_t i) { return m.bits[i] != 0; }, m.bits.size());
}
void put(Writer& w, const QberResult& m) {
  w.u64(m.disclosed);
  w.u64(m.errors);
  w.f64(m.qber);
  w.u8(m.abort ? 1 : 0);
}
void put(Writer& w, const Abort& m) {
  w.u8(static_cast<std::uint8_t>(m.reason));
  const auto n = std::min<std::size_t>(m.detail.size(), std::numeric_limits<std::uint16_t>::max());
  w.u16(static_cast<std::uint16_t>(n));
  for (std::size_t i = 0; i < n; ++i) w.u8(static_cast<std::uint8_t>(m.detail[i]));
}
void put(Writer& w, const Done& m) { w.u64(m.final_key_bits); }

bool boolean(std::uint8_t v) {
  if (v > 1) throw Malformed{};
  return v == 1;
}

Message parse(MessageType type, Reader& r) {
  switch (type) {
    case MessageType::hello: {
      Hello m;
      const std::uint8_t role = r.u8();
      if (role > 1) throw Malformed{};
      m.role = static_cast<Role>(role);
      m.session_id = r.u64();
      m.scenario_hash = r.u64();
      return m;
    }
    case MessageType::session_params: {
      SessionParams m;
      m.session_id = r.u64();
      m.n_pulses = r.u64();
      m.qber_abort_threshold = r.f64();
      const bool sampled = boolean(r.u8());
      const double fraction = r.f64();
      if (sampled) m.sample_fraction = fraction;
      else if (fraction != 1.0) throw Malformed{};
      m.rng_seed = r.u64();
      return m;
    }
    case MessageType::detection_report: {
      DetectionReport m;
      m.pulse_indices = r.indices();
      const auto bits = r.packed();
      if (bits.size() != m.pulse_indices.size()) throw Malformed{};
      m.bases.reserve(bits.size());
      for (auto b : bits) m.bases.push_back(b ? Basis::diagonal : Basis::rectilinear);
      return m;
    }
    case MessageType::match_mask: return MatchMask{r.packed()};
    case MessageType::sample_indices: return SampleIndices{r.indices()};
    case MessageType::sample_bits: return SampleBits{r.packed()};
    case MessageType::qber_result: {
      QberResult m;
      m.disclosed = r.u64();
      m.errors = r.u64();
      m.qber = r.f64();
      m.abort = boolean(r.u8());
      return m;
    }
    case MessageType::abort: {
      Abort m;
      const std::uint8_t reason = r.u8();
      if (reason < 1 || reason > 5) throw Malformed{};
      m.reason = static_cast<AbortReason>(reason);
      const std::uint16_t n = r.u16();
      if (n > r.remaining()) throw Malformed{};
      m.detail.resize(n);
      for (auto& c : m.detail) c = static_cast<char>(r.u8());
      return m;
    }
    case MessageType::done: return Done{r.u64()};
  }
  throw Malformed{};
}

bool known_type(std::uint8_t t) {
  switch (static_cast<MessageType>(t)) {
    case MessageType::hello:
    case MessageType::session_params:
    case MessageType::detection_report:
    case MessageType::match_mask:
    case MessageType::sample_indices:
    case MessageType::sample_bits:
    case MessageType::qber_result:
    case MessageType::abort:
    case MessageType::done: return true;
  }
  return false;
}

DecodeResult failure(FrameError error) { return {DecodeStatus::corrupt, error, 0, std::nullopt}; }

}  // namespace

std::string_view to_string(FrameError error) {
  switch (error) {
    case FrameError::none: return "none";
    case FrameError::bad_magic: return "bad_magic";
    case FrameError::bad_version: return "bad_version";
    case FrameError::unknown_type: return "unknown_type";
    case FrameError::oversized: return "oversized";
    case FrameError::bad_checksum: return "bad_checksum";
    case FrameError::malformed_payload: return "malformed_payload";
  }
  return "unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (!bytes.empty()) {
    const auto n = std::min<std::size_t>(bytes.size(), 1U << 30);
    crc = ::crc32(crc, bytes.data(), static_cast<uInt>(n));
    bytes = bytes.subspan(n);
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_frame(const Message& message) {
  Writer w;
  for (auto b : kMagic) w.u8(b);
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(type_of(message)));
  w.u32(0);
  std::visit([&](const auto& m) { put(w, m); }, message);
  auto& bytes = w.bytes();
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (payload > kMaxPayloadBytes) throw std::length_error("encode_frame: payload exceeds frame limit");
  for (std::size_t i = 0; i < 4; ++i) bytes[6 + i] = static_cast<std::uint8_t>(payload >> (8 * i));
  w.u32(crc32(bytes));
  return std::move(bytes);
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_seen = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_seen), kMagic.begin()))
    return failure(FrameError::bad_magic);
  if (bytes.size() > 4 && bytes[4] != kWireVersion) return failure(FrameError::bad_version);
  if (bytes.size() > 5 && !known_type(bytes[5])) return failure(FrameError::unknown_type);
  if (bytes.size() < kHeaderBytes) return {};

  std::uint32_t length = 0;
  for (std::size_t i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(bytes[6 + i]) << (8 * i);
  if (length > kMaxPayloadBytes) return failure(FrameError::oversized);
  const std::size_t total = kHeaderBytes + length + kTrailerBytes;
  if (bytes.size() < total) return {};

  const auto covered = bytes.first(kHeaderBytes + length);
  std::uint32_t stored = 0;
  for (std::size_t i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(bytes[kHeaderBytes + length + i]) << (8 * i);
  if (crc32(covered) != stored) return failure(FrameError::bad_checksum);

  try {
    Reader r(bytes.subspan(kHeaderBytes, length));
    Message m = parse(static_cast<MessageType>(bytes[5]), r);
    r.expect_end();
    return {DecodeStatus::ok, FrameError::none, total, std::move(m)};
  } catch (const Malformed&) {
    return failure(FrameError::malformed_payload);
  }
}

}  // namespace qkd::protocol
