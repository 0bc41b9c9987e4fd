#include "qkd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qkd {

namespace {

constexpr double kSpeedOfLightMps = 299'792'458.0;

double db_to_transmittance(double db) { return std::pow(10.0, -db / 10.0); }

}  // namespace

void ChannelConfig::validate() const {
  if (!(distance_m >= 0.0)) throw ConfigError("channel.distance_m", "must be >= 0");
  if (!(tx_beam_diameter_e2_cm > 0.0))
    throw ConfigError("channel.tx_beam_diameter_e2_cm", "must be > 0");
  if (!(rx_aperture_diameter_e2_cm > 0.0))
    throw ConfigError("channel.rx_aperture_diameter_e2_cm", "must be > 0");
  if (!(visibility_km > 0.0)) throw ConfigError("channel.visibility_km", "must be > 0");
  if (!(extra_loss_db >= 0.0)) throw ConfigError("channel.extra_loss_db", "must be >= 0");
  if (!(splitter_penalty_db >= 0.0))
    throw ConfigError("channel.splitter_penalty_db", "must be >= 0");
  if (!(retro_polarization_flip_prob >= 0.0 && retro_polarization_flip_prob <= 1.0))
    throw ConfigError("channel.retro_polarization_flip_prob", "must be in [0, 1]");
  if (!(fading_sigma >= 0.0)) throw ConfigError("channel.fading_sigma", "must be >= 0");
  if (!(fading_block_ms > 0.0)) throw ConfigError("channel.fading_block_ms", "must be > 0");
}

double ChannelConfig::effective_delay_ps() const {
  if (propagation_delay_ps >= 0.0) return propagation_delay_ps;
  return path_length_m() / kSpeedOfLightMps * 1e12;
}

double gaussian_beam_radius_cm(double waist_radius_cm, double distance_m, double wavelength_nm) {
  const double w0 = waist_radius_cm * 1e-2;
  const double rayleigh_m = std::numbers::pi * w0 * w0 / (wavelength_nm * 1e-9);
  const double ratio = distance_m / rayleigh_m;
  return waist_radius_cm * std::sqrt(1.0 + ratio * ratio);
}

double geometric_loss_db(const ChannelConfig& config, double wavelength_nm) {
  if (!(config.tx_beam_diameter_e2_cm > 0.0))
    throw ConfigError("channel.tx_beam_diameter_e2_cm", "must be > 0");
  if (!(config.rx_aperture_diameter_e2_cm > 0.0))
    throw ConfigError("channel.rx_aperture_diameter_e2_cm", "must be > 0");
  const double w = gaussian_beam_radius_cm(config.tx_beam_diameter_e2_cm / 2.0, config.distance_m,
                                           wavelength_nm);
  const double a = config.rx_aperture_diameter_e2_cm / 2.0;
  // -10 log10(1 - e^{-x}) computed without cancellation for small x.
  const double captured = -std::expm1(-2.0 * a * a / (w * w));
  return -10.0 * std::log10(captured);
}

double kim_exponent(double visibility_km) {
  const double v = visibility_km;
  if (v > 50.0) return 1.6;
  if (v > 6.0) return 1.3;
  if (v > 1.0) return 0.16 * v + 0.34;
  if (v > 0.5) return v - 0.5;
  return 0.0;
}

double atmospheric_attenuation_db_per_km(double visibility_km, double wavelength_nm) {
  const double sigma_per_km =
      (3.91 / visibility_km) * std::pow(wavelength_nm / 550.0, -kim_exponent(visibility_km));
  return 4.343 * sigma_per_km;
}

double atmospheric_loss_db(double visibility_km, double wavelength_nm, double distance_m) {
  if (!(visibility_km > 0.0)) throw ConfigError("channel.visibility_km", "must be > 0");
  return atmospheric_attenuation_db_per_km(visibility_km, wavelength_nm) * distance_m / 1000.0;
}

LossBreakdown link_loss(const ChannelConfig& config, double wavelength_nm) {
  LossBreakdown l;
  const double passes = config.retro_mode ? 2.0 : 1.0;
  l.geometric_db = passes * geometric_loss_db(config, wavelength_nm);
  l.atmospheric_db =
      passes * atmospheric_loss_db(config.visibility_km, wavelength_nm, config.distance_m);
  l.splitter_db = config.retro_mode ? config.splitter_penalty_db : 0.0;
  l.extra_db = config.extra_loss_db;
  l.total_db = l.geometric_db + l.atmospheric_db + l.splitter_db + l.extra_db;
  return l;
}

double total_link_loss_db(const ChannelConfig& config, double wavelength_nm) {
  return link_loss(config, wavelength_nm).total_db;
}

FreeSpaceChannel::FreeSpaceChannel(const ChannelConfig& config, double wavelength_nm,
                                   const TrueClock& clock)
    : config_(config),
      clock_(clock),
      losses_(link_loss(config, wavelength_nm)),
      transmittance_(db_to_transmittance(losses_.total_db)),
      delay_ps_(config.effective_delay_ps()),
      block_ps_(config.fading_block_ms * 1e9),
      log_sigma_(std::sqrt(std::log1p(config.fading_sigma * config.fading_sigma))),
      log_mu_(-0.5 * log_sigma_ * log_sigma_),
      fading_(derive_seed(config.rng_seed, "channel.fading")) {
  config_.validate();
  clock_.validate();
}

double FreeSpaceChannel::fading_factor(std::int64_t block) const {
  if (config_.fading_sigma == 0.0) return 1.0;
  const auto counter = static_cast<std::uint64_t>(block) * 2;
  const double z = box_muller(fading_.uniform(counter), fading_.uniform(counter + 1));
  return std::exp(log_mu_ + log_sigma_ * z);
}

double FreeSpaceChannel::survival_probability(double emit_ps) const {
  const auto block = static_cast<std::int64_t>(std::floor(emit_ps / block_ps_));
  return std::min(1.0, transmittance_ * fading_factor(block));
}

template <typename EmitTime>
void FreeSpaceChannel::propagate_photons(std::uint64_t index, Encoding enc, std::uint32_t photons,
                                         double grid_ps, EmitTime&& emit_time, Engine& rng,
                                         std::vector<PhotonArrival>& out) const {
  // Fading blocks are milliseconds long, so the grid time picks the block.
  const double p = survival_probability(grid_ps);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double arrival = 0.0;
  bool have_arrival = false;
  for (std::uint32_t k = 0; k < photons; ++k) {
    if (uniform(rng) >= p) continue;
    if (!have_arrival) {
      arrival = clock_.to_bob(emit_time() + delay_ps_);
      have_arrival = true;
    }
    double angle = polarization_angle(enc.basis, enc.bit);
    if (config_.retro_mode && config_.retro_polarization_flip_prob > 0.0 &&
        uniform(rng) < config_.retro_polarization_flip_prob) {
      angle = angle > 0.0 ? angle - 90.0 : angle + 90.0;
    }
    out.push_back({index, angle, arrival});
  }
}

void FreeSpaceChannel::propagate(const PulseRecord& pulse, Engine& rng,
                                 std::vector<PhotonArrival>& out) const {
  const double emit = static_cast<double>(pulse.emit_time_ps);
  propagate_photons(
      pulse.index, {pulse.basis, pulse.bit}, pulse.photon_count, emit, [emit] { return emit; }, rng,
      out);
}

void FreeSpaceChannel::transmit_range(const PulseSource& source, std::uint64_t first,
                                      std::uint64_t last, Engine& rng,
                                      std::vector<PhotonArrival>& out) const {
  const double period = source.period_ps();
  for (std::uint64_t i = first; i < last; ++i) {
    const std::uint32_t photons = source.photon_count(i);
    if (photons == 0) continue;
    propagate_photons(
        i, source.encoding(i), photons, static_cast<double>(i) * period,
        [&source, i] { return source.emit_time(i); }, rng, out);
  }
}

void sort_arrivals(std::vector<PhotonArrival>& arrivals) {
  std::stable_sort(arrivals.begin(), arrivals.end(),
                   [](const PhotonArrival& a, const PhotonArrival& b) {
                     return a.arrival_time_ps < b.arrival_time_ps;
                   });
}

std::vector<PhotonArrival> transmit(std::span<const PulseRecord> train, const ChannelConfig& config,
                                    double wavelength_nm, const TrueClock& clock, Engine& rng) {
  const FreeSpaceChannel channel(config, wavelength_nm, clock);
  std::vector<PhotonArrival> out;
  for (const PulseRecord& pulse : train) channel.propagate(pulse, rng, out);
  sort_arrivals(out);
  return out;
}

}  // namespace qkd
