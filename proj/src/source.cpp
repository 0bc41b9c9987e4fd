#include "qkd/source.hpp"

#include <cmath>
#include <limits>

namespace qkd {

namespace {
constexpr double kFwhmToSigma = 1.0 / 2.354820045030949;
}

void SourceConfig::validate() const {
  if (!(rep_rate_hz > 0.0) || !std::isfinite(rep_rate_hz))
    throw ConfigError("source.rep_rate_hz", "must be > 0");
  if (!(pulse_fwhm_ps >= 0.0) || pulse_fwhm_ps >= period_ps())
    throw ConfigError("source.pulse_fwhm_ps", "must be >= 0 and shorter than the pulse period");
  if (!(wavelength_nm > 0.0)) throw ConfigError("source.wavelength_nm", "must be > 0");
  for (std::size_t i = 0; i < mu_per_state.size(); ++i) {
    if (!(mu_per_state[i] >= 0.0) || !std::isfinite(mu_per_state[i]))
      throw ConfigError("source.mu_per_state[" + std::to_string(i) + "]", "must be >= 0");
  }
}

double polarization_angle(Basis basis, std::uint8_t bit) {
  if (basis == Basis::rectilinear) return bit == 0 ? 0.0 : 90.0;
  return bit == 0 ? 45.0 : -45.0;
}

std::uint32_t poisson_from_uniform(double mu, double u) {
  if (mu <= 0.0) return 0;
  double p = std::exp(-mu);
  double cdf = p;
  std::uint32_t k = 0;
  // Stop once the remaining tail is below double resolution.
  while (u >= cdf && p > 0.0) {
    ++k;
    p *= mu / k;
    cdf += p;
    if (cdf >= 1.0) break;
  }
  return k;
}

PulseSource::PulseSource(const SourceConfig& config)
    : config_(config),
      period_ps_(config.period_ps()),
      sigma_ps_(config.pulse_fwhm_ps * kFwhmToSigma),
      encoding_(derive_seed(config.rng_seed, "source.encoding")),
      timing_(derive_seed(config.rng_seed, "source.timing")) {
  config_.validate();
  for (std::size_t s = 0; s < kDetectorCount; ++s) vacuum_[s] = std::exp(-config_.mu_per_state[s]);
}

double PulseSource::emit_time(std::uint64_t index) const {
  const double grid = static_cast<double>(index) * period_ps_;
  if (sigma_ps_ == 0.0) return grid;
  const double u1 = timing_.uniform(2 * index);
  const double u2 = timing_.uniform(2 * index + 1);
  return grid + sigma_ps_ * box_muller(u1, u2);
}

std::int64_t PulseSource::emit_time_ps(std::uint64_t index) const {
  return static_cast<std::int64_t>(std::llround(emit_time(index)));
}

PulseRecord PulseSource::pulse(std::uint64_t index) const {
  const Encoding enc = encoding(index);
  return {index, enc.basis, enc.bit, photon_count(index), emit_time_ps(index)};
}

std::vector<PulseRecord> build_pulse_train(const SourceConfig& config, std::uint64_t n_pulses) {
  if (n_pulses == 0) throw EmptyTrainError();
  const PulseSource source(config);
  std::vector<PulseRecord> train;
  train.reserve(n_pulses);
  for (std::uint64_t i = 0; i < n_pulses; ++i) train.push_back(source.pulse(i));
  return train;
}

}  // namespace qkd
