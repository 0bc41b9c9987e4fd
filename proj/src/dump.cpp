#include "qkd/dump.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace qkd {

namespace {

template <typename T>
void put_le(std::uint8_t* dst, T value) {
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<std::uint8_t>(u >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* src) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(src[i]) << (8 * i);
  return static_cast<T>(u);
}

/// Reads exactly `n` bytes; false on clean EOF before the first byte.
bool read_record(std::istream& in, std::uint8_t* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got == 0) return false;
  if (got != n) throw std::runtime_error("dump: truncated record");
  return true;
}

}  // namespace

void write_pulse_record(std::ostream& out, const PulseRecord& pulse) {
  std::array<std::uint8_t, kPulseRecordBytes> buf{};
  put_le<std::uint64_t>(buf.data(), pulse.index);
  buf[8] = static_cast<std::uint8_t>(pulse.basis);
  buf[9] = pulse.bit;
  buf[10] = static_cast<std::uint8_t>(std::min<std::uint32_t>(pulse.photon_count, 255));
  put_le<std::int64_t>(buf.data() + 11, pulse.emit_time_ps);
  out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
}

void write_pulse_dump(std::ostream& out, std::span<const PulseRecord> pulses) {
  for (const PulseRecord& p : pulses) write_pulse_record(out, p);
}

std::vector<PulseRecord> read_pulse_dump(std::istream& in) {
  std::vector<PulseRecord> pulses;
  std::array<std::uint8_t, kPulseRecordBytes> buf{};
  while (read_record(in, buf.data(), buf.size())) {
    if (buf[8] > 1 || buf[9] > 1) throw std::runtime_error("dump: invalid basis or bit");
    pulses.push_back({get_le<std::uint64_t>(buf.data()), static_cast<Basis>(buf[8]), buf[9], buf[10],
                      get_le<std::int64_t>(buf.data() + 11)});
  }
  return pulses;
}

void write_tag_dump(std::ostream& out, std::span<const TimeTag> tags) {
  std::array<std::uint8_t, kTagRecordBytes> buf{};
  for (const TimeTag& tag : tags) {
    buf[0] = static_cast<std::uint8_t>(tag.detector);
    put_le<std::int64_t>(buf.data() + 1, tag.time_ps);
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  }
}

std::vector<TimeTag> read_tag_dump(std::istream& in) {
  std::vector<TimeTag> tags;
  std::array<std::uint8_t, kTagRecordBytes> buf{};
  while (read_record(in, buf.data(), buf.size())) {
    if (buf[0] >= kDetectorCount) throw std::runtime_error("dump: invalid detector channel");
    tags.push_back({get_le<std::int64_t>(buf.data() + 1), static_cast<Detector>(buf[0]), -1});
  }
  return tags;
}

}  // namespace qkd
