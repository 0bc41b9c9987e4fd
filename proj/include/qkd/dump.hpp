#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "qkd/source.hpp"
#include "qkd/types.hpp"

namespace qkd {

// Binary replay formats, all little-endian:
//   pulse record: index u64, basis u8, bit u8, photon count u8 (saturating), emit_time_ps i64
//   time tag:     detector u8, time_ps i64

inline constexpr std::size_t kPulseRecordBytes = 19;
inline constexpr std::size_t kTagRecordBytes = 9;

void write_pulse_record(std::ostream& out, const PulseRecord& pulse);
void write_pulse_dump(std::ostream& out, std::span<const PulseRecord> pulses);
/// Throws std::runtime_error on a truncated or invalid record.
std::vector<PulseRecord> read_pulse_dump(std::istream& in);

void write_tag_dump(std::ostream& out, std::span<const TimeTag> tags);
/// Replayed tags carry no ground truth (source_pulse = -1).
std::vector<TimeTag> read_tag_dump(std::istream& in);

}  // namespace qkd
