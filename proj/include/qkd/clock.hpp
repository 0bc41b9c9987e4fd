#pragma once

#include <cmath>
#include <cstdint>

#include "qkd/types.hpp"

namespace qkd {

/// Ground-truth relation between Alice's clock and Bob's time tagger.
struct TrueClock {
  double offset_ps = 0.0;
  double drift_ppm = 0.0;

  /// Bob-clock reading at the instant Alice's clock reads `alice_ps`.
  double to_bob(double alice_ps) const { return alice_ps * (1.0 + drift_ppm * 1e-6) + offset_ps; }

  void validate() const {
    if (!std::isfinite(offset_ps)) throw ConfigError("sync.true_clock.offset_ps", "must be finite");
    if (!(std::abs(drift_ppm) <= 100.0))
      throw ConfigError("sync.true_clock.drift_ppm", "|drift| must be <= 100 ppm");
  }
};

/// Recovered mapping from Alice's pulse index to Bob's tagger time.
struct ClockModel {
  /// Bob time of pulse 0.
  double offset_ps = 0.0;
  double drift_ppm = 0.0;
  double residual_rms_ps = 0.0;
  double nominal_period_ps = 0.0;

  double period_ps() const { return nominal_period_ps * (1.0 + drift_ppm * 1e-6); }
  double pulse_time(double index) const { return offset_ps + index * period_ps(); }

  friend bool operator==(const ClockModel&, const ClockModel&) = default;
};

}  // namespace qkd
