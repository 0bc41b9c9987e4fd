#pragma once

#include <cstdint>
#include <vector>

#include "qkd/protocol/session.hpp"
#include "qkd/scenario.hpp"

namespace qkd {

/// Bob's side of the optical session: the tag stream as his tagger records it.
struct QuantumPhase {
  std::vector<TimeTag> tags;
  std::uint64_t photons_arrived = 0;
  std::uint64_t signal_tags = 0;
  std::uint64_t background_tags = 0;
  std::uint64_t dead_time_dropped = 0;
  /// Sync-beacon frame marker: Bob time of pulse 0, rounded to the marker resolution.
  double epoch_hint_ps = 0.0;
};

inline constexpr double kEpochMarkerResolutionPs = 1000.0;
/// Pulses per shard; each shard uses seeds derived from its number.
inline constexpr std::uint64_t kShardPulses = std::uint64_t{1} << 22;

/// Beacon frame marker implied by the scenario's true clock and link delay.
double epoch_hint_ps(const Scenario& scenario);

/// Source, channel and receiver over the whole session. Deterministic given
/// the scenario seeds and independent of how the work is scheduled.
QuantumPhase simulate_quantum_phase(const Scenario& scenario);

protocol::SharedSessionInfo shared_info(const Scenario& scenario);
protocol::AliceContext alice_context(const Scenario& scenario, const PulseSource& source);
protocol::BobContext bob_context(const Scenario& scenario, const QuantumPhase& quantum);

struct SessionPair {
  protocol::SessionReport alice;
  protocol::SessionReport bob;
};

/// Both parties in one process over an in-memory pipe, Bob on a worker thread.
SessionPair run_in_process(const Scenario& scenario, const QuantumPhase& quantum);
SessionPair run_in_process(const Scenario& scenario);

}  // namespace qkd
