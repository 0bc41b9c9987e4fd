#include "qkd/sync.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>

namespace qkd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMinTags = 1000;

double positive_fmod(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  return r;
}

/// Fractional part in [0, 1).
double frac(double x) { return x - std::floor(x); }

struct SearchResult {
  double frequency;  // cycles per ps
  std::complex<double> phasor;
};

/**
 * Scans `count` equally spaced folding frequencies starting at `f_start` with
 * step `f_step`, returning the one with the largest phasor magnitude over
 * `times` (relative to the first tag). Phases advance by a per-tag rotation,
 * so each candidate costs one complex multiply per tag.
 */
SearchResult scan_frequencies(std::span<const double> times, double f_start, double f_step,
                              std::size_t count) {
  std::vector<std::complex<double>> sums(count);
  for (double x : times) {
    std::complex<double> z = std::polar(1.0, kTwoPi * frac(x * f_start));
    const std::complex<double> rot = std::polar(1.0, kTwoPi * frac(x * f_step));
    for (std::size_t k = 0; k < count; ++k) {
      sums[k] += z;
      z *= rot;
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < count; ++k) {
    if (std::norm(sums[k]) > std::norm(sums[best])) best = k;
  }
  // Recompute the winner directly; the rotated phasors carry rounding drift.
  const double f = f_start + static_cast<double>(best) * f_step;
  std::complex<double> exact{};
  for (double x : times) exact += std::polar(1.0, kTwoPi * frac(x * f));
  return {f, exact};
}

double locate_frequency(std::span<const double> times, double nominal_period_ps,
                        double max_drift_ppm, std::size_t coarse_tags) {
  const double f0 = 1.0 / nominal_period_ps;
  const double span = times.back();
  std::size_t n = std::min(times.size(), std::max<std::size_t>(coarse_tags, 2));
  double window = std::max(times[n - 1], 100.0 * nominal_period_ps);
  // Candidates spaced so the phase error at the window end stays below 1/16 cycle.
  double step = 1.0 / (8.0 * window);
  const double half_range = f0 * max_drift_ppm * 1e-6;
  double centre = f0;
  double reach = half_range;
  for (;;) {
    const auto half_count = static_cast<std::size_t>(std::ceil(reach / step));
    const SearchResult r =
        scan_frequencies(times.first(n), centre - static_cast<double>(half_count) * step, step,
                         2 * half_count + 1);
    centre = r.frequency;
    if (window >= span) break;
    window = std::min(8.0 * window, span);
    n = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), window) -
                                 times.begin());
    reach = 2.0 * step;
    step = 1.0 / (8.0 * window);
  }
  return centre;
}

struct BlockPhase {
  double time;    // mean tag time in block (relative)
  double phase;   // residual in ps
  double weight;  // background-subtracted signal count
};

/// Residual of `x` against the grid `offset + n * period`, in [-period/2, period/2).
double grid_residual(double x, double offset, double period) {
  return positive_fmod(x - offset + 0.5 * period, period) - 0.5 * period;
}

std::vector<BlockPhase> block_phases(std::span<const double> times, double offset, double period,
                                     std::size_t block_count, double half_window) {
  std::vector<BlockPhase> blocks;
  const double span = times.back() - times.front();
  const double width = span / static_cast<double>(block_count);
  std::size_t i = 0;
  for (std::size_t b = 0; b < block_count; ++b) {
    const double end = b + 1 == block_count ? std::numeric_limits<double>::infinity()
                                            : times.front() + width * static_cast<double>(b + 1);
    std::complex<double> phasor{};
    const std::size_t begin = i;
    for (; i < times.size() && times[i] < end; ++i) {
      phasor += std::polar(1.0, kTwoPi * grid_residual(times[i], offset, period) / period);
    }
    if (i == begin || std::abs(phasor) == 0.0) continue;
    const double centre = std::arg(phasor) / kTwoPi * period;
    double sum = 0.0;
    double sum_t = 0.0;
    std::size_t inside = 0;
    for (std::size_t j = begin; j < i; ++j) {
      const double r = grid_residual(times[j], offset + centre, period);
      if (std::abs(r) <= half_window) {
        sum += r;
        sum_t += times[j];
        ++inside;
      }
    }
    const std::size_t total = i - begin;
    const double outside_density =
        static_cast<double>(total - inside) / (period - 2.0 * half_window);
    const double weight = static_cast<double>(inside) - outside_density * 2.0 * half_window;
    if (inside == 0 || weight <= 0.0) continue;
    blocks.push_back({sum_t / static_cast<double>(inside),
                      centre + sum / static_cast<double>(inside), weight});
  }
  return blocks;
}

}  // namespace

void GateConfig::validate(double period_ps) const {
  if (!(gate_width_ps > 0.0) || !(gate_width_ps < period_ps))
    throw ConfigError("sync.gate_width_ps", "must satisfy 0 < gate < pulse period");
}

std::vector<std::uint64_t> fold_histogram(std::span<const TimeTag> tags, double period_ps,
                                          std::size_t n_bins, double origin_ps) {
  if (n_bins < 2) throw ConfigError("sync.histogram_bins", "must be >= 2");
  if (!(period_ps > 0.0)) throw ConfigError("sync.period_ps", "must be > 0");
  std::vector<std::uint64_t> histogram(n_bins, 0);
  const double bins = static_cast<double>(n_bins);
  for (const TimeTag& tag : tags) {
    const double phase = positive_fmod(static_cast<double>(tag.time_ps) - origin_ps, period_ps);
    auto bin = static_cast<std::size_t>(phase / period_ps * bins);
    histogram[std::min(bin, n_bins - 1)] += 1;
  }
  return histogram;
}

std::vector<std::uint64_t> fold_histogram(std::span<const TimeTag> tags, const ClockModel& clock,
                                          std::size_t n_bins) {
  if (n_bins < 2) throw ConfigError("sync.histogram_bins", "must be >= 2");
  const double period = clock.period_ps();
  std::vector<std::uint64_t> histogram(n_bins, 0);
  const double bins = static_cast<double>(n_bins);
  for (const TimeTag& tag : tags) {
    const double r = grid_residual(static_cast<double>(tag.time_ps), clock.offset_ps, period);
    auto bin = static_cast<std::size_t>((r / period + 0.5) * bins);
    histogram[std::min(bin, n_bins - 1)] += 1;
  }
  return histogram;
}

void write_histogram_csv(std::ostream& out, std::span<const std::uint64_t> histogram,
                         double period_ps, double first_bin_start_ps) {
  out << "bin_start_ps,count\n";
  const double width = period_ps / static_cast<double>(histogram.size());
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    out << first_bin_start_ps + width * static_cast<double>(i) << ',' << histogram[i] << '\n';
  }
}

ClockModel recover_clock(std::span<const TimeTag> tags, double nominal_period_ps,
                         std::size_t block_count, const ClockSearchOptions& options) {
  if (tags.size() < kMinTags) throw SyncFailure("clock recovery needs at least 1000 tags");
  if (!(nominal_period_ps > 0.0)) throw ConfigError("sync.period_ps", "must be > 0");
  block_count = std::max<std::size_t>(block_count, 1);

  const std::int64_t t0 = tags.front().time_ps;
  std::vector<double> times;
  times.reserve(tags.size());
  for (const TimeTag& tag : tags) {
    if (tag.time_ps < t0) throw ContractViolation("recover_clock: tags must be sorted by time");
    times.push_back(static_cast<double>(tag.time_ps - t0));
  }
  if (times.back() <= 0.0) throw SyncFailure("clock recovery needs tags spread over time");

  double frequency = 0.0;
  if (options.known_drift_ppm) {
    frequency = 1.0 / (nominal_period_ps * (1.0 + *options.known_drift_ppm * 1e-6));
  } else {
    frequency = locate_frequency(times, nominal_period_ps, options.max_drift_ppm,
                                 options.coarse_window_tags);
  }
  double period = 1.0 / frequency;

  std::complex<double> phasor{};
  for (double x : times) phasor += std::polar(1.0, kTwoPi * frac(x * frequency));
  double offset = positive_fmod(std::arg(phasor) / kTwoPi * period, period);

  double residual_rms = 0.0;
  const double windows[] = {period / 8.0, std::min(period / 8.0, 500.0), std::min(period / 8.0, 500.0)};
  for (double half_window : windows) {
    const auto blocks = block_phases(times, offset, period, block_count, half_window);
    if (blocks.empty()) break;
    double sw = 0.0, st = 0.0, sp = 0.0;
    for (const auto& b : blocks) {
      sw += b.weight;
      st += b.weight * b.time;
      sp += b.weight * b.phase;
    }
    const double t_ref = st / sw;
    const double p_ref = sp / sw;
    double stt = 0.0, stp = 0.0;
    for (const auto& b : blocks) {
      stt += b.weight * (b.time - t_ref) * (b.time - t_ref);
      stp += b.weight * (b.time - t_ref) * (b.phase - p_ref);
    }
    const double slope = (blocks.size() >= 2 && stt > 0.0 && !options.known_drift_ppm) ? stp / stt : 0.0;
    const double intercept = p_ref;  // residual at t_ref
    double ss = 0.0;
    for (const auto& b : blocks) {
      const double e = b.phase - (intercept + slope * (b.time - t_ref));
      ss += b.weight * e * e;
    }
    residual_rms = std::sqrt(ss / sw);
    // Pulse n sits where t - (offset + n period) = intercept + slope (t - t_ref).
    offset = (offset + intercept - slope * t_ref) / (1.0 - slope);
    period = period / (1.0 - slope);
  }

  ClockModel model;
  model.nominal_period_ps = nominal_period_ps;
  model.drift_ppm = (period / nominal_period_ps - 1.0) * 1e6;
  model.residual_rms_ps = residual_rms;
  // Unwrap the pulse-0 position next to the beacon's frame marker.
  const double absolute = static_cast<double>(t0) + offset;
  const double k = std::round((options.epoch_hint_ps - absolute) / period);
  model.offset_ps = absolute + k * period;

  const auto histogram = fold_histogram(tags, model, std::max<std::size_t>(options.histogram_bins, 2));
  std::vector<std::uint64_t> sorted = histogram;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const std::uint64_t median = sorted[sorted.size() / 2];
  const std::uint64_t peak = *std::max_element(histogram.begin(), histogram.end());
  if (peak < 3 * median || peak == 0) {
    throw SyncFailure("no significant pulse-grid peak in folded histogram (peak " +
                      std::to_string(peak) + ", median " + std::to_string(median) + ")");
  }
  return model;
}

GateResult assign_and_gate(std::span<const TimeTag> tags, const ClockModel& clock,
                           const GateConfig& gate, std::uint64_t pulse_limit) {
  GateResult result;
  result.assignments.reserve(tags.size());
  const double period = clock.period_ps();
  const double half_gate = 0.5 * gate.gate_width_ps;
  for (const TimeTag& tag : tags) {
    const double t = static_cast<double>(tag.time_ps);
    const double x = (t - clock.offset_ps) / period;
    const double n = std::ceil(x - 0.5);
    const double residual = t - clock.pulse_time(n);
    if (std::abs(residual) > half_gate) {
      ++result.rejected;
      continue;
    }
    if (n < 0.0 || n >= static_cast<double>(pulse_limit)) {
      ++result.out_of_range;
      continue;
    }
    result.assignments.push_back({static_cast<std::uint64_t>(n), tag.detector, tag.source_pulse});
  }
  return result;
}

}  // namespace qkd
