#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkd/protocol/session.hpp"
#include "qkd/scenario.hpp"

namespace qkd {

/// Closed-form link budget for a scenario. All probabilities are per pulse.
struct PredictedMetrics {
  std::uint64_t scenario_hash = 0;
  std::uint64_t n_pulses = 0;
  double duration_s = 0.0;

  LossBreakdown loss;
  double total_loss_db = 0.0;
  double receiver_efficiency_db = 0.0;
  /// Fraction of signal detections inside the timing gate.
  double gate_acceptance_signal = 0.0;
  /// Signal click probability, gate acceptance folded in.
  double p_signal_click_per_pulse = 0.0;
  /// Background click probability inside the gate, all four APDs.
  double p_background_per_pulse = 0.0;
  /// Error probability of a basis-matched signal detection.
  double e_pol = 0.0;
  double qber_background_part = 0.0;
  double qber_misalignment_part = 0.0;
  double qber_total = 0.0;
  double sifted_rate_bps = 0.0;
  double expected_sifted_bits = 0.0;
  /// Relative variance of the session-mean transmittance from block fading.
  double fading_rate_rel_variance = 0.0;

  friend bool operator==(const PredictedMetrics&, const PredictedMetrics&) = default;
};

/// Timing-gate acceptance for Gaussian pulse width plus detector jitter.
double gate_acceptance(double pulse_fwhm_ps, double jitter_fwhm_ps, double gate_width_ps);

/// Pure and deterministic. Throws ConfigError for an invalid scenario.
PredictedMetrics predict(const Scenario& scenario);

struct Tolerances {
  /// Relative tolerance on the sifted key rate.
  double rate_rel = 0.15;
  /// Absolute tolerance on the QBER.
  double qber_abs = 0.004;
  /// Statistical floor in standard deviations; the allowed deviation is the
  /// larger of the fixed tolerance and this many sigma.
  double sigma_floor = 3.0;
};

struct MetricDeviation {
  std::string metric;
  double predicted = 0.0;
  double measured = 0.0;
  /// Relative for rates, absolute for QBER.
  double deviation = 0.0;
  double sigma = 0.0;
  double allowed = 0.0;
  bool pass = false;

  friend bool operator==(const MetricDeviation&, const MetricDeviation&) = default;
};

struct DeviationReport {
  std::uint64_t scenario_hash = 0;
  std::vector<MetricDeviation> metrics;
  bool pass = false;

  /// Names of the failing metrics.
  std::vector<std::string> failures() const;
  friend bool operator==(const DeviationReport&, const DeviationReport&) = default;
};

class ComparisonRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ComparisonRefused when the report comes from a different scenario.
DeviationReport compare(const PredictedMetrics& predicted, const protocol::SessionReport& report,
                        const Tolerances& tolerances = {});

}  // namespace qkd
