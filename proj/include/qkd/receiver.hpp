#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkd/channel.hpp"
#include "qkd/rng.hpp"
#include "qkd/types.hpp"

namespace qkd {

enum class DoubleClickPolicy : std::uint8_t { random_bit = 0, discard = 1 };

struct ReceiverConfig {
  /// Lumped spectral filter, fibre coupling and APD efficiency, as a loss.
  double efficiency_db = 0.0;
  /// Residual analyser rotation left by the polarisation compensation.
  double misalignment_deg = 0.0;
  /// Background light plus dark counts, per APD.
  double background_rate_cps_per_apd = 0.0;
  double jitter_fwhm_ps = 350.0;
  double dead_time_ns = 50.0;
  std::int64_t tag_resolution_ps = 1;
  DoubleClickPolicy double_click_policy = DoubleClickPolicy::random_bit;
  std::uint64_t rng_seed = 3;

  void validate() const;
};

/// Probability that a photon at `angle_deg` lands on the bit-0 detector of `analyzer`.
double first_detector_probability(double angle_deg, Basis analyzer, double misalignment_deg);

/// Malus-law projection onto the two detectors of the analyser basis.
Detector project(double angle_deg, Basis analyzer, double misalignment_deg, Engine& rng);

/**
 * Bob's four-APD passive analyser. The passes are exposed separately so the
 * simulation can run signal detection shard by shard and apply background
 * and dead time once over the merged stream.
 */
class Receiver {
 public:
  explicit Receiver(const ReceiverConfig& config);

  const ReceiverConfig& config() const { return config_; }

  std::int64_t quantize(double time_ps) const;

  /// Efficiency, passive basis choice, projection and jitter. Input must be sorted.
  void detect_signal(std::span<const PhotonArrival> arrivals, Engine& rng,
                     std::vector<TimeTag>& out) const;

  /// One Poisson process per APD over [start_ps, start_ps + length_ps).
  void add_background(double start_ps, double length_ps, Engine& rng,
                      std::vector<TimeTag>& out) const;

  /// Sorts and drops tags inside each detector's dead time. Returns the number dropped.
  std::size_t apply_dead_time(std::vector<TimeTag>& tags) const;

 private:
  ReceiverConfig config_;
  double jitter_sigma_ps_;
  double efficiency_;
  std::int64_t dead_time_ps_;
};

/// Orders by time, then detector.
void sort_tags(std::vector<TimeTag>& tags);

/// Full detector pass; background covers [0, session_duration_s).
std::vector<TimeTag> detect(std::span<const PhotonArrival> arrivals, const ReceiverConfig& config,
                            double session_duration_s, Engine& rng);

enum class ClickKind : std::uint8_t { no_click, single, multi };

struct PulseOutcome {
  std::uint64_t pulse_index = 0;
  ClickKind kind = ClickKind::no_click;
  /// Valid when kind == single.
  Detector detector = Detector::H;
  /// Bit i set when detector i clicked in this slot.
  std::uint8_t clicked = 0;

  bool double_click() const { return (clicked & (clicked - 1)) != 0; }
};

/// Resolves the clicks recorded in one pulse slot.
PulseOutcome classify_slot(std::uint64_t pulse_index, std::span<const Detector> clicks,
                           DoubleClickPolicy policy, Engine& rng);

/// Groups assignments (sorted by pulse index) per slot; slots without clicks are omitted.
std::vector<PulseOutcome> classify_clicks(std::span<const PulseAssignment> assignments,
                                          DoubleClickPolicy policy, Engine& rng);

}  // namespace qkd
