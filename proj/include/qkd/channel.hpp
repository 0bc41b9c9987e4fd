#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkd/clock.hpp"
#include "qkd/rng.hpp"
#include "qkd/source.hpp"

namespace qkd {

struct ChannelConfig {
  /// One-way distance; in retro mode this is the distance to the reflector.
  double distance_m = 780.0;
  double tx_beam_diameter_e2_cm = 3.48;
  double rx_aperture_diameter_e2_cm = 4.20;
  double visibility_km = 10.0;
  /// Optical train, filter insertion, pointing: whatever the geometric and
  /// atmospheric terms do not cover.
  double extra_loss_db = 0.0;
  bool retro_mode = false;
  double splitter_penalty_db = 6.0;
  /// Probability that the retro-reflector flips a photon to the orthogonal state.
  double retro_polarization_flip_prob = 0.0;
  /// Standard deviation of the log-normal fading factor (mean 1).
  double fading_sigma = 0.0;
  double fading_block_ms = 10.0;
  /// Negative means "derive from distance at c".
  double propagation_delay_ps = -1.0;
  std::uint64_t rng_seed = 2;

  void validate() const;
  double path_length_m() const { return retro_mode ? 2.0 * distance_m : distance_m; }
  double effective_delay_ps() const;
};

struct LossBreakdown {
  double geometric_db = 0.0;
  double atmospheric_db = 0.0;
  double splitter_db = 0.0;
  double extra_db = 0.0;
  double total_db = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// 1/e^2 radius after propagating `distance_m` from a waist of `waist_radius_cm`.
double gaussian_beam_radius_cm(double waist_radius_cm, double distance_m, double wavelength_nm);

/// Aperture capture loss of a Gaussian beam for a single pass.
double geometric_loss_db(const ChannelConfig& config, double wavelength_nm);

/// Kim-model size-distribution exponent for a visibility in km.
double kim_exponent(double visibility_km);
double atmospheric_attenuation_db_per_km(double visibility_km, double wavelength_nm);
double atmospheric_loss_db(double visibility_km, double wavelength_nm, double distance_m);

/// Per-contribution breakdown; geometric and atmospheric terms double in retro mode.
LossBreakdown link_loss(const ChannelConfig& config, double wavelength_nm);
double total_link_loss_db(const ChannelConfig& config, double wavelength_nm);

struct PhotonArrival {
  std::uint64_t pulse_index = 0;
  double polarization_angle_deg = 0.0;
  /// Bob's raw clock, before tagger quantisation.
  double arrival_time_ps = 0.0;
};

/**
 * Monte-Carlo application of the link budget. Photons survive independently
 * with probability 10^(-loss/10) * F, where F is a log-normal factor held
 * constant over fading blocks. Fading factors are keyed by block number, so
 * results do not depend on how the pulse range is sharded.
 */
class FreeSpaceChannel {
 public:
  FreeSpaceChannel(const ChannelConfig& config, double wavelength_nm, const TrueClock& clock);

  const ChannelConfig& config() const { return config_; }
  const LossBreakdown& losses() const { return losses_; }
  double mean_transmittance() const { return transmittance_; }
  double fading_factor(std::int64_t block) const;
  /// Survival probability for a photon emitted at Alice time `emit_ps`.
  double survival_probability(double emit_ps) const;

  /// Propagates the photons of one materialised pulse, appending survivors to `out`.
  void propagate(const PulseRecord& pulse, Engine& rng, std::vector<PhotonArrival>& out) const;

  /// Propagates pulses [first, last) of `source`, appending survivors in emission order.
  void transmit_range(const PulseSource& source, std::uint64_t first, std::uint64_t last, Engine& rng,
                      std::vector<PhotonArrival>& out) const;

 private:
  ChannelConfig config_;
  TrueClock clock_;
  LossBreakdown losses_;
  double transmittance_;
  double delay_ps_;
  double block_ps_;
  double log_sigma_;
  double log_mu_;
  CounterStream fading_;

  template <typename EmitTime>
  void propagate_photons(std::uint64_t index, Encoding enc, std::uint32_t photons, double grid_ps,
                         EmitTime&& emit_time, Engine& rng, std::vector<PhotonArrival>& out) const;
};

/// Sorts by arrival time; ties keep pulse-index order.
void sort_arrivals(std::vector<PhotonArrival>& arrivals);

std::vector<PhotonArrival> transmit(std::span<const PulseRecord> train, const ChannelConfig& config,
                                    double wavelength_nm, const TrueClock& clock, Engine& rng);

}  // namespace qkd
