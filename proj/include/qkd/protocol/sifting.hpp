#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkd/protocol/messages.hpp"
#include "qkd/receiver.hpp"
#include "qkd/rng.hpp"
#include "qkd/source.hpp"

namespace qkd::protocol {

struct SiftedKey {
  std::vector<std::uint8_t> bits;
  std::vector<std::uint64_t> pulse_indices;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const SiftedKey&, const SiftedKey&) = default;
};

struct QberReport {
  std::uint64_t disclosed = 0;
  std::uint64_t errors = 0;
  double qber = 0.0;
  bool abort = false;

  friend bool operator==(const QberReport&, const QberReport&) = default;
};

/// Single-click outcomes become report entries (index + basis); multi-click
/// outcomes (discard policy) are dropped. Outcomes must be ordered by pulse index.
DetectionReport bob_detection_report(std::span<const PulseOutcome> outcomes);

/// Outcomes that made it into the report, in report order.
std::vector<PulseOutcome> reported_outcomes(std::span<const PulseOutcome> outcomes);

struct AliceSifting {
  MatchMask mask;
  SiftedKey key;
};

/// Basis reconciliation on Alice's side. Throws ProtocolViolation for an index
/// >= n_pulses, non-increasing indices, or a basis/index count mismatch.
AliceSifting alice_match(const PulseSource& source, std::uint64_t n_pulses,
                         const DetectionReport& report);
AliceSifting alice_match(std::span<const PulseRecord> train, const DetectionReport& report);

/// Bob's key from his reported outcomes and Alice's mask.
SiftedKey bob_sift(std::span<const PulseOutcome> reported, const MatchMask& mask);

/// Bob's choice of disclosed positions: all of them in benchmark mode,
/// otherwise ceil(fraction * size) positions drawn without replacement, sorted.
std::vector<std::uint64_t> select_sample_positions(std::size_t key_size,
                                                   const SessionParams& params, Engine& rng);

SampleBits disclose(const SiftedKey& key, std::span<const std::uint64_t> positions);

/// Alice's comparison of Bob's disclosed bits against her own.
QberReport evaluate_sample(const SiftedKey& alice_key, std::span<const std::uint64_t> positions,
                           const SampleBits& bob_bits, double abort_threshold);

/// Drops the disclosed positions (sorted, unique) from a key.
void remove_positions(SiftedKey& key, std::span<const std::uint64_t> positions);

/// Both sides of the QBER exchange in one call. Disclosed positions are
/// removed from both keys. Throws InconclusiveSession for an empty key.
QberReport estimate_qber(SiftedKey& alice_key, SiftedKey& bob_key, const SessionParams& params,
                         Engine& rng);

}  // namespace qkd::protocol
