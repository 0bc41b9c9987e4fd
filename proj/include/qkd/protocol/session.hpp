#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "qkd/channel.hpp"
#include "qkd/protocol/messages.hpp"
#include "qkd/protocol/sifting.hpp"
#include "qkd/protocol/transport.hpp"
#include "qkd/receiver.hpp"
#include "qkd/source.hpp"
#include "qkd/sync.hpp"

namespace qkd::protocol {

/// Everything a party reports at the end of a session. Times are simulated
/// session time, never wall-clock, so reports are reproducible byte for byte.
struct SessionReport {
  Role role = Role::alice;
  std::uint64_t session_id = 0;
  std::uint64_t scenario_hash = 0;
  /// "completed" or "aborted".
  std::string status;
  std::string abort_reason;
  std::string abort_detail;

  std::uint64_t n_pulses = 0;
  double duration_s = 0.0;
  std::uint64_t detected_pulses = 0;
  std::uint64_t sifted_bits = 0;
  double sifted_key_rate_bps = 0.0;
  std::uint64_t final_key_bits = 0;
  QberReport qber;

  // Bob-side statistics; zero in Alice's report.
  std::uint64_t tags_total = 0;
  std::uint64_t tags_gated_out = 0;
  std::uint64_t tags_out_of_range = 0;
  std::uint64_t multi_click_pulses = 0;
  std::array<std::uint64_t, kDetectorCount> detector_counts{};
  ClockModel clock;

  LossBreakdown loss;
  double receiver_efficiency_db = 0.0;

  friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

/// Transport failure mid-session; `phase()` names the step that was running.
class SessionFailed : public std::runtime_error {
 public:
  SessionFailed(std::string phase, const std::string& what)
      : std::runtime_error("session failed during " + phase + ": " + what), phase_(std::move(phase)) {}
  const std::string& phase() const noexcept { return phase_; }

 private:
  std::string phase_;
};

/// Parameters both parties must agree on, plus report bookkeeping.
struct SharedSessionInfo {
  SessionParams params;
  std::uint64_t scenario_hash = 0;
  double duration_s = 0.0;
  LossBreakdown loss;
  double receiver_efficiency_db = 0.0;
};

struct AliceContext {
  SharedSessionInfo shared;
  const PulseSource* source = nullptr;
};

struct BobContext {
  SharedSessionInfo shared;
  std::span<const TimeTag> tags;
  double nominal_period_ps = 10'000.0;
  std::size_t block_count = 20;
  ClockSearchOptions clock_options;
  GateConfig gate;
  DoubleClickPolicy double_click_policy = DoubleClickPolicy::random_bit;
  std::uint64_t classify_seed = 0;
};

/// Bob's local processing of the tag stream before any message is sent.
struct BobDetections {
  ClockModel clock;
  GateResult gate;
  std::vector<PulseOutcome> reported;
  std::uint64_t multi_click_pulses = 0;
};

/// Throws SyncFailure when the pulse grid cannot be recovered.
BobDetections process_detections(const BobContext& context);

SessionReport run_alice(Transport& transport, const AliceContext& context,
                        MessageStream::Observer observer = {});
SessionReport run_bob(Transport& transport, const BobContext& context,
                      MessageStream::Observer observer = {});

}  // namespace qkd::protocol
