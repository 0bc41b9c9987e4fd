#include "qkd/protocol/sifting.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

namespace qkd::protocol {

namespace {

template <typename Lookup>
AliceSifting match_with(Lookup&& encoding_at, std::uint64_t n_pulses, const DetectionReport& report) {
  if (report.pulse_indices.size() != report.bases.size())
    throw ProtocolViolation("detection report: index and basis counts differ");
  AliceSifting out;
  out.mask.keep.reserve(report.pulse_indices.size());
  for (std::size_t i = 0; i < report.pulse_indices.size(); ++i) {
    const std::uint64_t index = report.pulse_indices[i];
    if (index >= n_pulses)
      throw ProtocolViolation("detection report: pulse index " + std::to_string(index) +
                              " out of range");
    if (i > 0 && index <= report.pulse_indices[i - 1])
      throw ProtocolViolation("detection report: pulse indices not strictly increasing");
    const Encoding enc = encoding_at(index);
    const bool keep = enc.basis == report.bases[i];
    out.mask.keep.push_back(keep ? 1 : 0);
    if (keep) {
      out.key.bits.push_back(enc.bit);
      out.key.pulse_indices.push_back(index);
    }
  }
  return out;
}

}  // namespace

DetectionReport bob_detection_report(std::span<const PulseOutcome> outcomes) {
  DetectionReport report;
  for (const PulseOutcome& o : outcomes) {
    if (o.kind != ClickKind::single) continue;
    report.pulse_indices.push_back(o.pulse_index);
    report.bases.push_back(basis_of(o.detector));
  }
  return report;
}

std::vector<PulseOutcome> reported_outcomes(std::span<const PulseOutcome> outcomes) {
  std::vector<PulseOutcome> out;
  std::copy_if(outcomes.begin(), outcomes.end(), std::back_inserter(out),
               [](const PulseOutcome& o) { return o.kind == ClickKind::single; });
  return out;
}

AliceSifting alice_match(const PulseSource& source, std::uint64_t n_pulses,
                         const DetectionReport& report) {
  return match_with([&](std::uint64_t i) { return source.encoding(i); }, n_pulses, report);
}

AliceSifting alice_match(std::span<const PulseRecord> train, const DetectionReport& report) {
  return match_with([&](std::uint64_t i) { return Encoding{train[i].basis, train[i].bit}; },
                    train.size(), report);
}

SiftedKey bob_sift(std::span<const PulseOutcome> reported, const MatchMask& mask) {
  if (reported.size() != mask.keep.size())
    throw ProtocolViolation("match mask length " + std::to_string(mask.keep.size()) +
                            " does not match report length " + std::to_string(reported.size()));
  SiftedKey key;
  for (std::size_t i = 0; i < reported.size(); ++i) {
    if (!mask.keep[i]) continue;
    key.bits.push_back(bit_of(reported[i].detector));
    key.pulse_indices.push_back(reported[i].pulse_index);
  }
  return key;
}

std::vector<std::uint64_t> select_sample_positions(std::size_t key_size,
                                                   const SessionParams& params, Engine& rng) {
  std::vector<std::uint64_t> all(key_size);
  std::iota(all.begin(), all.end(), std::uint64_t{0});
  if (params.benchmark()) return all;
  const auto wanted = std::min<std::size_t>(
      key_size, static_cast<std::size_t>(std::ceil(*params.sample_fraction * static_cast<double>(key_size))));
  std::vector<std::uint64_t> chosen;
  chosen.reserve(wanted);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), wanted, rng);
  return chosen;
}

SampleBits disclose(const SiftedKey& key, std::span<const std::uint64_t> positions) {
  SampleBits out;
  out.bits.reserve(positions.size());
  for (std::uint64_t p : positions) {
    if (p >= key.size()) throw ProtocolViolation("sample position out of range");
    out.bits.push_back(key.bits[p]);
  }
  return out;
}

QberReport evaluate_sample(const SiftedKey& alice_key, std::span<const std::uint64_t> positions,
                           const SampleBits& bob_bits, double abort_threshold) {
  if (positions.size() != bob_bits.bits.size())
    throw ProtocolViolation("sample bits do not match sample positions");
  if (positions.empty()) throw InconclusiveSession("no bits disclosed for QBER estimation");
  QberReport report;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= alice_key.size()) throw ProtocolViolation("sample position out of range");
    if (i > 0 && positions[i] <= positions[i - 1])
      throw ProtocolViolation("sample positions not strictly increasing");
    if (alice_key.bits[positions[i]] != bob_bits.bits[i]) ++report.errors;
  }
  report.disclosed = positions.size();
  report.qber = static_cast<double>(report.errors) / static_cast<double>(report.disclosed);
  report.abort = report.qber > abort_threshold;
  return report;
}

void remove_positions(SiftedKey& key, std::span<const std::uint64_t> positions) {
  SiftedKey kept;
  std::size_t next = 0;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (next < positions.size() && positions[next] == i) {
      ++next;
      continue;
    }
    kept.bits.push_back(key.bits[i]);
    kept.pulse_indices.push_back(key.pulse_indices[i]);
  }
  key = std::move(kept);
}

QberReport estimate_qber(SiftedKey& alice_key, SiftedKey& bob_key, const SessionParams& params,
                         Engine& rng) {
  if (alice_key.size() == 0 || bob_key.size() == 0)
    throw InconclusiveSession("sifted key is empty");
  if (alice_key.size() != bob_key.size()) throw ProtocolViolation("sifted keys are not aligned");
  const auto positions = select_sample_positions(bob_key.size(), params, rng);
  const SampleBits bits = disclose(bob_key, positions);
  const QberReport report = evaluate_sample(alice_key, positions, bits, params.qber_abort_threshold);
  remove_positions(alice_key, positions);
  remove_positions(bob_key, positions);
  return report;
}

}  // namespace qkd::protocol
