#include "qkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qkd {

namespace {

constexpr double kFwhmToSigma = 1.0 / 2.354820045030949;

double sin2_deg(double deg) {
  const double s = std::sin(deg * std::numbers::pi / 180.0);
  return s * s;
}

MetricDeviation judge(std::string name, double predicted, double measured, double deviation,
                      double sigma, double tolerance, double sigma_floor) {
  MetricDeviation m{std::move(name), predicted, measured, deviation, sigma, 0.0, false};
  m.allowed = std::max(tolerance, sigma_floor * sigma);
  m.pass = std::abs(deviation) <= m.allowed;
  return m;
}

}  // namespace

double gate_acceptance(double pulse_fwhm_ps, double jitter_fwhm_ps, double gate_width_ps) {
  const double sp = pulse_fwhm_ps * kFwhmToSigma;
  const double sj = jitter_fwhm_ps * kFwhmToSigma;
  const double sigma = std::sqrt(sp * sp + sj * sj);
  if (sigma == 0.0) return 1.0;
  return std::erf(0.5 * gate_width_ps / (sigma * std::numbers::sqrt2));
}

PredictedMetrics predict(const Scenario& scenario) {
  scenario.validate();
  PredictedMetrics m;
  m.scenario_hash = scenario_hash(scenario);
  m.n_pulses = scenario.n_pulses();
  m.duration_s = scenario.duration_s;
  m.loss = link_loss(scenario.channel, scenario.source.wavelength_nm);
  m.total_loss_db = m.loss.total_db;
  m.receiver_efficiency_db = scenario.receiver.efficiency_db;

  const double eta = std::pow(10.0, -(m.total_loss_db + m.receiver_efficiency_db) / 10.0);
  m.gate_acceptance_signal = gate_acceptance(scenario.source.pulse_fwhm_ps,
                                             scenario.receiver.jitter_fwhm_ps,
                                             scenario.sync.gate.gate_width_ps);
  double p_sig = 0.0;
  for (double mu : scenario.source.mu_per_state) {
    p_sig += -std::expm1(-mu * eta * m.gate_acceptance_signal);
  }
  m.p_signal_click_per_pulse = p_sig / static_cast<double>(kDetectorCount);
  m.p_background_per_pulse = 4.0 * scenario.receiver.background_rate_cps_per_apd *
                             scenario.sync.gate.gate_width_ps * 1e-12;

  const double e_mis = sin2_deg(scenario.receiver.misalignment_deg);
  const double flip = scenario.channel.retro_mode ? scenario.channel.retro_polarization_flip_prob : 0.0;
  m.e_pol = e_mis * (1.0 - flip) + (1.0 - e_mis) * flip;

  const double p_click = m.p_signal_click_per_pulse + m.p_background_per_pulse;
  if (p_click > 0.0) {
    m.qber_background_part = 0.5 * m.p_background_per_pulse / p_click;
    m.qber_misalignment_part = m.e_pol * m.p_signal_click_per_pulse / p_click;
  }
  m.qber_total = m.qber_background_part + m.qber_misalignment_part;
  m.sifted_rate_bps = scenario.source.rep_rate_hz * p_click * 0.5;
  m.expected_sifted_bits = m.sifted_rate_bps * scenario.duration_s;

  if (scenario.channel.fading_sigma > 0.0 && p_click > 0.0) {
    const double session_ps = static_cast<double>(m.n_pulses) * scenario.source.period_ps();
    const double blocks = std::ceil(session_ps / (scenario.channel.fading_block_ms * 1e9));
    const double share = m.p_signal_click_per_pulse / p_click;
    m.fading_rate_rel_variance =
        share * share * scenario.channel.fading_sigma * scenario.channel.fading_sigma / blocks;
  }
  return m;
}

std::vector<std::string> DeviationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& m : metrics) {
    if (!m.pass) out.push_back(m.metric);
  }
  return out;
}

DeviationReport compare(const PredictedMetrics& predicted, const protocol::SessionReport& report,
                        const Tolerances& tolerances) {
  if (predicted.scenario_hash != report.scenario_hash)
    throw ComparisonRefused("scenario hash mismatch: prediction and session describe different scenarios");

  DeviationReport out;
  out.scenario_hash = predicted.scenario_hash;

  const double expected_bits = predicted.expected_sifted_bits;
  double rate_dev = 0.0;
  double rate_sigma = 0.0;
  if (predicted.sifted_rate_bps > 0.0) {
    rate_dev = (report.sifted_key_rate_bps - predicted.sifted_rate_bps) / predicted.sifted_rate_bps;
    rate_sigma = std::sqrt(1.0 / expected_bits + predicted.fading_rate_rel_variance);
  } else if (report.sifted_key_rate_bps > 0.0) {
    rate_dev = std::numeric_limits<double>::infinity();
  }
  out.metrics.push_back(judge("sifted_rate_bps", predicted.sifted_rate_bps,
                              report.sifted_key_rate_bps, rate_dev, rate_sigma, tolerances.rate_rel,
                              tolerances.sigma_floor));

  const double q = predicted.qber_total;
  const double n = report.qber.disclosed > 0 ? static_cast<double>(report.qber.disclosed) : expected_bits;
  const double qber_sigma = n > 0.0 ? std::sqrt(q * (1.0 - q) / n) : 0.0;
  out.metrics.push_back(judge("qber", q, report.qber.qber, report.qber.qber - q, qber_sigma,
                              tolerances.qber_abs, tolerances.sigma_floor));

  out.pass = std::all_of(out.metrics.begin(), out.metrics.end(),
                         [](const MetricDeviation& m) { return m.pass; });
  return out;
}

}  // namespace qkd
