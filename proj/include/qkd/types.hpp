#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qkd {

enum class Basis : std::uint8_t { rectilinear = 0, diagonal = 1 };

/// Polarization states and the APDs that detect them share one index: H, V, D, A.
enum class Detector : std::uint8_t { H = 0, V = 1, D = 2, A = 3 };

inline constexpr std::size_t kDetectorCount = 4;
inline constexpr std::array<Detector, kDetectorCount> kAllDetectors{Detector::H, Detector::V,
                                                                    Detector::D, Detector::A};

constexpr std::size_t index_of(Detector d) { return static_cast<std::size_t>(d); }

constexpr Basis basis_of(Detector d) {
  return index_of(d) < 2 ? Basis::rectilinear : Basis::diagonal;
}

/// Bit convention: H->0, V->1, D->0, A->1.
constexpr std::uint8_t bit_of(Detector d) { return static_cast<std::uint8_t>(index_of(d) & 1U); }

constexpr Detector detector_for(Basis b, std::uint8_t bit) {
  return static_cast<Detector>(static_cast<std::uint8_t>(b) * 2U + (bit & 1U));
}

std::string_view to_string(Basis b);
std::string_view to_string(Detector d);

/// Detection event as recorded by the time tagger.
struct TimeTag {
  std::int64_t time_ps = 0;
  Detector detector = Detector::H;
  /// Simulation ground truth; -1 for background. Never read by Bob's processing.
  std::int64_t source_pulse = -1;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// A gated tag attributed to one of Alice's pulse slots.
struct PulseAssignment {
  std::uint64_t pulse_index = 0;
  Detector detector = Detector::H;
  std::int64_t source_pulse = -1;

  friend bool operator==(const PulseAssignment&, const PulseAssignment&) = default;
};

/// Invalid configuration value; `field()` names the offending path, e.g. "channel.visibility_km".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Caller broke a documented precondition (e.g. unsorted input stream).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EmptyTrainError : public std::invalid_argument {
 public:
  EmptyTrainError() : std::invalid_argument("pulse train must contain at least one pulse") {}
};

/// No usable pulse-grid signature in the tag stream.
class SyncFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nothing to estimate QBER on.
class InconclusiveSession : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qkd
