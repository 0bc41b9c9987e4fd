#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qkd/types.hpp"

namespace qkd::protocol {

enum class Role : std::uint8_t { alice = 0, bob = 1 };

std::string_view to_string(Role role);

enum class MessageType : std::uint8_t {
  hello = 0x01,
  session_params = 0x02,
  detection_report = 0x10,
  match_mask = 0x11,
  sample_indices = 0x20,
  sample_bits = 0x21,
  qber_result = 0x22,
  abort = 0x30,
  done = 0x31,
};

std::string_view to_string(MessageType type);

struct SessionParams {
  std::uint64_t session_id = 1;
  std::uint64_t n_pulses = 0;
  double qber_abort_threshold = 0.10;
  /// Fraction of the sifted key disclosed for QBER estimation; empty means
  /// benchmark mode (disclose everything, keep nothing).
  std::optional<double> sample_fraction;
  /// Seeds Bob's choice of sample positions.
  std::uint64_t rng_seed = 4;

  bool benchmark() const { return !sample_fraction.has_value(); }
  void validate() const;

  friend bool operator==(const SessionParams&, const SessionParams&) = default;
};

struct Hello {
  Role role = Role::alice;
  std::uint64_t session_id = 0;
  std::uint64_t scenario_hash = 0;

  friend bool operator==(const Hello&, const Hello&) = default;
};

/// Bob's detected pulses and his measurement bases. Carries no bit values.
struct DetectionReport {
  std::vector<std::uint64_t> pulse_indices;
  std::vector<Basis> bases;

  friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
};

/// Alice's verdict per reported pulse: 1 when bases matched.
struct MatchMask {
  std::vector<std::uint8_t> keep;

  friend bool operator==(const MatchMask&, const MatchMask&) = default;
};

/// Positions in the sifted key that Bob discloses.
struct SampleIndices {
  std::vector<std::uint64_t> positions;

  friend bool operator==(const SampleIndices&, const SampleIndices&) = default;
};

struct SampleBits {
  std::vector<std::uint8_t> bits;

  friend bool operator==(const SampleBits&, const SampleBits&) = default;
};

struct QberResult {
  std::uint64_t disclosed = 0;
  std::uint64_t errors = 0;
  double qber = 0.0;
  bool abort = false;

  friend bool operator==(const QberResult&, const QberResult&) = default;
};

enum class AbortReason : std::uint8_t {
  parameter_mismatch = 1,
  protocol_violation = 2,
  qber_exceeded = 3,
  inconclusive = 4,
  sync_failure = 5,
};

std::string_view to_string(AbortReason reason);

struct Abort {
  AbortReason reason = AbortReason::protocol_violation;
  std::string detail;

  friend bool operator==(const Abort&, const Abort&) = default;
};

struct Done {
  std::uint64_t final_key_bits = 0;

  friend bool operator==(const Done&, const Done&) = default;
};

using Message = std::variant<Hello, SessionParams, DetectionReport, MatchMask, SampleIndices,
                             SampleBits, QberResult, Abort, Done>;

MessageType type_of(const Message& message);

}  // namespace qkd::protocol
