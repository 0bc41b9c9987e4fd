#pragma once

#include "qkd/scenario.hpp"

namespace fixture {

/// Short, bright, noiseless direct link: about 6e-3 detections per pulse.
inline qkd::Scenario noiseless(std::uint64_t seed = 1, double duration_s = 0.01) {
  qkd::Scenario s;
  s.metadata["name"] = "noiseless";
  s.duration_s = duration_s;
  s.channel.visibility_km = 10.0;
  s.receiver.efficiency_db = 10.0;
  s.receiver.misalignment_deg = 0.0;
  s.receiver.background_rate_cps_per_apd = 0.0;
  s.sync.true_clock = {2'500.0, 3.0};
  return s.with_seed(seed);
}

/// Noiseless link with a matched-basis error rate of sin^2(misalignment).
inline qkd::Scenario misaligned(double misalignment_deg, std::uint64_t seed, double duration_s = 0.01) {
  qkd::Scenario s = noiseless(seed, duration_s);
  s.receiver.misalignment_deg = misalignment_deg;
  return s;
}

}  // namespace fixture
