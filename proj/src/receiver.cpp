#include "qkd/receiver.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>

namespace qkd {

namespace {
constexpr double kFwhmToSigma = 1.0 / 2.354820045030949;
}

void ReceiverConfig::validate() const {
  if (!(efficiency_db >= 0.0)) throw ConfigError("receiver.efficiency_db", "must be >= 0");
  if (!std::isfinite(misalignment_deg))
    throw ConfigError("receiver.misalignment_deg", "must be finite");
  if (!(background_rate_cps_per_apd >= 0.0))
    throw ConfigError("receiver.background_rate_cps_per_apd", "must be >= 0");
  if (!(jitter_fwhm_ps >= 0.0)) throw ConfigError("receiver.jitter_fwhm_ps", "must be >= 0");
  if (!(dead_time_ns >= 0.0)) throw ConfigError("receiver.dead_time_ns", "must be >= 0");
  if (tag_resolution_ps < 1) throw ConfigError("receiver.tag_resolution_ps", "must be >= 1");
}

double first_detector_probability(double angle_deg, Basis analyzer, double misalignment_deg) {
  const double axis = (analyzer == Basis::rectilinear ? 0.0 : 45.0) + misalignment_deg;
  const double delta = (angle_deg - axis) * std::numbers::pi / 180.0;
  const double c = std::cos(delta);
  return c * c;
}

Detector project(double angle_deg, Basis analyzer, double misalignment_deg, Engine& rng) {
  const double p0 = first_detector_probability(angle_deg, analyzer, misalignment_deg);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::uint8_t bit = uniform(rng) < p0 ? 0 : 1;
  return detector_for(analyzer, bit);
}

Receiver::Receiver(const ReceiverConfig& config)
    : config_(config),
      jitter_sigma_ps_(config.jitter_fwhm_ps * kFwhmToSigma),
      efficiency_(std::pow(10.0, -config.efficiency_db / 10.0)),
      dead_time_ps_(static_cast<std::int64_t>(std::llround(config.dead_time_ns * 1000.0))) {
  config_.validate();
}

std::int64_t Receiver::quantize(double time_ps) const {
  const auto res = static_cast<double>(config_.tag_resolution_ps);
  return static_cast<std::int64_t>(std::floor(time_ps / res + 0.5)) * config_.tag_resolution_ps;
}

void Receiver::detect_signal(std::span<const PhotonArrival> arrivals, Engine& rng,
                             std::vector<TimeTag>& out) const {
  const bool sorted = std::is_sorted(arrivals.begin(), arrivals.end(),
                                     [](const PhotonArrival& a, const PhotonArrival& b) {
                                       return a.arrival_time_ps < b.arrival_time_ps;
                                     });
  if (!sorted) throw ContractViolation("detect: arrivals must be sorted by arrival time");

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, jitter_sigma_ps_ > 0.0 ? jitter_sigma_ps_ : 1.0);
  for (const PhotonArrival& photon : arrivals) {
    if (efficiency_ < 1.0 && uniform(rng) >= efficiency_) continue;
    const Basis basis = uniform(rng) < 0.5 ? Basis::rectilinear : Basis::diagonal;
    const Detector det = project(photon.polarization_angle_deg, basis, config_.misalignment_deg, rng);
    double t = photon.arrival_time_ps;
    if (jitter_sigma_ps_ > 0.0) t += jitter(rng);
    out.push_back({quantize(t), det, static_cast<std::int64_t>(photon.pulse_index)});
  }
}

void Receiver::add_background(double start_ps, double length_ps, Engine& rng,
                              std::vector<TimeTag>& out) const {
  const double rate_per_ps = config_.background_rate_cps_per_apd * 1e-12;
  if (rate_per_ps <= 0.0 || length_ps <= 0.0) return;
  std::exponential_distribution<double> gap(rate_per_ps);
  const double end = start_ps + length_ps;
  for (Detector det : kAllDetectors) {
    for (double t = start_ps + gap(rng); t < end; t += gap(rng)) {
      out.push_back({quantize(t), det, -1});
    }
  }
}

std::size_t Receiver::apply_dead_time(std::vector<TimeTag>& tags) const {
  sort_tags(tags);
  if (dead_time_ps_ <= 0) return 0;
  std::array<std::int64_t, kDetectorCount> last{};
  std::array<bool, kDetectorCount> armed{};
  const auto before = tags.size();
  std::erase_if(tags, [&](const TimeTag& tag) {
    const std::size_t d = index_of(tag.detector);
    if (armed[d] && tag.time_ps - last[d] < dead_time_ps_) return true;
    armed[d] = true;
    last[d] = tag.time_ps;
    return false;
  });
  return before - tags.size();
}

void sort_tags(std::vector<TimeTag>& tags) {
  std::stable_sort(tags.begin(), tags.end(), [](const TimeTag& a, const TimeTag& b) {
    if (a.time_ps != b.time_ps) return a.time_ps < b.time_ps;
    return a.detector < b.detector;
  });
}

std::vector<TimeTag> detect(std::span<const PhotonArrival> arrivals, const ReceiverConfig& config,
                            double session_duration_s, Engine& rng) {
  const Receiver receiver(config);
  std::vector<TimeTag> tags;
  receiver.detect_signal(arrivals, rng, tags);
  receiver.add_background(0.0, session_duration_s * 1e12, rng, tags);
  receiver.apply_dead_time(tags);
  return tags;
}

PulseOutcome classify_slot(std::uint64_t pulse_index, std::span<const Detector> clicks,
                           DoubleClickPolicy policy, Engine& rng) {
  PulseOutcome outcome{pulse_index, ClickKind::no_click, Detector::H, 0};
  for (Detector d : clicks) outcome.clicked |= static_cast<std::uint8_t>(1U << index_of(d));
  const int distinct = std::popcount(outcome.clicked);
  if (distinct == 0) return outcome;
  if (distinct > 1 && policy == DoubleClickPolicy::discard) {
    outcome.kind = ClickKind::multi;
    return outcome;
  }
  int pick = 0;
  if (distinct > 1) pick = std::uniform_int_distribution<int>(0, distinct - 1)(rng);
  for (Detector d : kAllDetectors) {
    if ((outcome.clicked >> index_of(d)) & 1U) {
      if (pick-- == 0) {
        outcome.detector = d;
        break;
      }
    }
  }
  outcome.kind = ClickKind::single;
  return outcome;
}

std::vector<PulseOutcome> classify_clicks(std::span<const PulseAssignment> assignments,
                                          DoubleClickPolicy policy, Engine& rng) {
  std::vector<PulseOutcome> outcomes;
  std::vector<Detector> slot;
  std::size_t i = 0;
  while (i < assignments.size()) {
    const std::uint64_t index = assignments[i].pulse_index;
    slot.clear();
    for (; i < assignments.size() && assignments[i].pulse_index == index; ++i) {
      slot.push_back(assignments[i].detector);
    }
    if (i < assignments.size() && assignments[i].pulse_index < index)
      throw ContractViolation("classify_clicks: assignments must be ordered by pulse index");
    outcomes.push_back(classify_slot(index, slot, policy, rng));
  }
  return outcomes;
}

}  // namespace qkd
