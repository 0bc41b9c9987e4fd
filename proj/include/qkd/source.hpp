#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <random>
#include <vector>

#include "qkd/rng.hpp"
#include "qkd/types.hpp"

namespace qkd {

struct SourceConfig {
  double rep_rate_hz = 100e6;
  double pulse_fwhm_ps = 200.0;
  double wavelength_nm = 852.0;
  /// Mean photon number per pulse, indexed H, V, D, A.
  std::array<double, kDetectorCount> mu_per_state{0.1, 0.1, 0.1, 0.1};
  std::uint64_t rng_seed = 1;

  double period_ps() const { return 1e12 / rep_rate_hz; }
  /// Throws ConfigError naming the field under "source.".
  void validate() const;
};

struct PulseRecord {
  std::uint64_t index = 0;
  Basis basis = Basis::rectilinear;
  std::uint8_t bit = 0;
  std::uint32_t photon_count = 0;
  std::int64_t emit_time_ps = 0;

  friend bool operator==(const PulseRecord&, const PulseRecord&) = default;
};

struct Encoding {
  Basis basis;
  std::uint8_t bit;
  Detector state() const { return detector_for(basis, bit); }
};

/// Polarizer orientation for a prepared state: H 0, V 90, D 45, A -45 degrees.
double polarization_angle(Basis basis, std::uint8_t bit);

/// Inverse-CDF Poisson deviate for a uniform `u` in [0, 1).
std::uint32_t poisson_from_uniform(double mu, double u);

template <std::uniform_random_bit_generator G>
std::uint32_t sample_photon_count(double mu, G& rng) {
  return poisson_from_uniform(mu, std::generate_canonical<double, 53>(rng));
}

/**
 * Alice's weak-coherent source. Each pulse is a pure function of
 * (rng_seed, index), so any pulse can be regenerated on demand; the protocol
 * side never stores the full train.
 */
class PulseSource {
 public:
  explicit PulseSource(const SourceConfig& config);

  const SourceConfig& config() const { return config_; }
  double period_ps() const { return period_ps_; }

  Encoding encoding(std::uint64_t index) const {
    const std::uint64_t word = encoding_.bits(index);
    // Low two bits are the state index (2 * basis + bit).
    return {static_cast<Basis>((word >> 1) & 1U), static_cast<std::uint8_t>(word & 1U)};
  }

  std::uint32_t photon_count(std::uint64_t index) const {
    const std::uint64_t word = encoding_.bits(index);
    const auto state = static_cast<std::size_t>(word & 3U);
    const double u = unit_interval(word);
    // Fast path: the vacuum outcome dominates at weak-coherent intensities.
    if (u < vacuum_[state]) return 0;
    return poisson_from_uniform(config_.mu_per_state[state], u);
  }

  /// Emission instant in ps on Alice's clock, grid time plus Gaussian pulse-width jitter.
  double emit_time(std::uint64_t index) const;
  std::int64_t emit_time_ps(std::uint64_t index) const;

  PulseRecord pulse(std::uint64_t index) const;

 private:
  SourceConfig config_;
  double period_ps_;
  double sigma_ps_;
  CounterStream encoding_;
  CounterStream timing_;
  std::array<double, kDetectorCount> vacuum_{};
};

/// Materialises pulses [0, n_pulses). Throws EmptyTrainError for n_pulses == 0.
std::vector<PulseRecord> build_pulse_train(const SourceConfig& config, std::uint64_t n_pulses);

}  // namespace qkd
