#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "qkd/channel.hpp"
#include "qkd/clock.hpp"
#include "qkd/protocol/messages.hpp"
#include "qkd/receiver.hpp"
#include "qkd/source.hpp"
#include "qkd/sync.hpp"

namespace qkd {

struct SyncSettings {
  GateConfig gate;
  std::size_t block_count = 20;
  std::size_t histogram_bins = 100;
  TrueClock true_clock;
  /// Drift known a priori from the sync beacon; only the phase is searched.
  bool beacon_assisted = false;
  double max_drift_ppm = 100.0;
};

/**
 * A complete experiment description. Metadata mirrors the campaign tables
 * verbatim (date, weather, targets) and has no physical effect.
 */
struct Scenario {
  std::map<std::string, std::string> metadata;
  SourceConfig source;
  ChannelConfig channel;
  ReceiverConfig receiver;
  SyncSettings sync;
  /// n_pulses is derived from duration_s and the repetition rate.
  protocol::SessionParams protocol;
  double duration_s = 1.0;

  std::string name() const;
  std::uint64_t n_pulses() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Copy with every RNG seed derived from `seed`.
  Scenario with_seed(std::uint64_t seed) const;
  /// Copy simulating `duration_s` seconds instead.
  Scenario with_duration(double duration_s) const;
};

nlohmann::ordered_json to_json(const Scenario& scenario);

/// Strict parse: unknown keys, wrong types and missing required fields throw
/// ConfigError with the JSON path of the field.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON encoding; identical scenarios hash identically.
std::uint64_t scenario_hash(const Scenario& scenario);

}  // namespace qkd
