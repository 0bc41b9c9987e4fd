#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qkd/clock.hpp"
#include "qkd/types.hpp"

namespace qkd {

struct GateConfig {
  /// Full width of the acceptance window centred on the recovered pulse position.
  double gate_width_ps = 500.0;

  void validate(double period_ps) const;
};

/// Tuning for recover_clock beyond the nominal period and block count.
struct ClockSearchOptions {
  /// Half-width of the drift search range.
  double max_drift_ppm = 100.0;
  /// Beacon-assisted mode: the drift is known a priori and not searched.
  std::optional<double> known_drift_ppm;
  /// Coarse Bob-time estimate of pulse 0 (from the sync beacon's frame marker).
  /// Must be within half a period of the truth to fix the integer pulse index.
  double epoch_hint_ps = 0.0;
  /// Bins used for the folded-histogram significance test.
  std::size_t histogram_bins = 100;
  /// Tags in the first (widest-range) drift search window.
  std::size_t coarse_window_tags = 2000;
};

/// Counts of ((time - origin) mod period) per bin; sum equals the tag count.
std::vector<std::uint64_t> fold_histogram(std::span<const TimeTag> tags, double period_ps,
                                          std::size_t n_bins, double origin_ps = 0.0);

/// Phase histogram relative to a recovered clock (bin 0 starts half a period before each pulse).
std::vector<std::uint64_t> fold_histogram(std::span<const TimeTag> tags, const ClockModel& clock,
                                          std::size_t n_bins);

/// CSV with header `bin_start_ps,count`.
void write_histogram_csv(std::ostream& out, std::span<const std::uint64_t> histogram,
                         double period_ps, double first_bin_start_ps = 0.0);

/**
 * Recovers Alice's pulse grid from Bob's tags.
 *
 * The drift is located by a coarse-to-fine search over the folding
 * frequency: a short prefix of the stream scans the full drift range, then
 * each stage extends the window 8x and rescans a narrow band around the
 * previous optimum. The result is refined by splitting the stream into
 * `block_count` blocks, estimating each block's pulse phase, and fitting a
 * weighted line through the block phases.
 *
 * Throws SyncFailure when fewer than 1000 tags are given or the folded
 * histogram has no significant peak (peak bin < 3x median bin).
 */
ClockModel recover_clock(std::span<const TimeTag> tags, double nominal_period_ps,
                         std::size_t block_count, const ClockSearchOptions& options = {});

struct GateResult {
  std::vector<PulseAssignment> assignments;
  std::size_t rejected = 0;
  std::size_t out_of_range = 0;
};

/// Maps every tag to its nearest pulse (ties go to the lower index) and keeps
/// tags whose residual is within half the gate width and whose index is below `pulse_limit`.
GateResult assign_and_gate(std::span<const TimeTag> tags, const ClockModel& clock,
                           const GateConfig& gate,
                           std::uint64_t pulse_limit = std::numeric_limits<std::uint64_t>::max());

}  // namespace qkd
