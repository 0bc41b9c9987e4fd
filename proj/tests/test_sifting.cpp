#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "qkd/protocol/sifting.hpp"

using namespace qkd;
using namespace qkd::protocol;

namespace {

PulseRecord rec(std::uint64_t i, Basis b, std::uint8_t bit) { return {i, b, bit, 1, 0}; }

PulseOutcome single(std::uint64_t i, Detector d) {
  return {i, ClickKind::single, d, static_cast<std::uint8_t>(1U << index_of(d))};
}

/// Alice's train plus Bob's outcomes where Bob measured each pulse in a random
/// basis and, when matched, read the prepared bit.
struct Toy {
  std::vector<PulseRecord> train;
  std::vector<PulseOutcome> outcomes;
};

Toy toy(std::size_t n, std::uint64_t seed) {
  Engine rng = make_engine(seed);
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<Basis>(rng() & 1U);
    const auto bit = static_cast<std::uint8_t>(rng() & 1U);
    t.train.push_back(rec(i, b, bit));
    const auto bob_basis = static_cast<Basis>(rng() & 1U);
    const auto bob_bit = bob_basis == b ? bit : static_cast<std::uint8_t>(rng() & 1U);
    t.outcomes.push_back(single(i, detector_for(bob_basis, bob_bit)));
  }
  return t;
}

}  // namespace

TEST_CASE("worked sifting example") {
  // Pulses 3, 7, 9 single; 5 a discarded double click.
  const std::vector<PulseOutcome> outcomes{
      single(3, Detector::V), {5, ClickKind::multi, Detector::H, 0b0101}, single(7, Detector::D),
      single(9, Detector::H)};
  const auto report = bob_detection_report(outcomes);
  CHECK(report.pulse_indices == std::vector<std::uint64_t>{3, 7, 9});
  CHECK(report.bases == std::vector<Basis>{Basis::rectilinear, Basis::diagonal, Basis::rectilinear});

  std::vector<PulseRecord> train(10);
  for (std::uint64_t i = 0; i < 10; ++i) train[i] = rec(i, Basis::rectilinear, 0);
  train[3] = rec(3, Basis::rectilinear, 1);
  train[7] = rec(7, Basis::rectilinear, 0);
  train[9] = rec(9, Basis::rectilinear, 0);
  const auto alice = alice_match(train, report);
  CHECK(alice.mask.keep == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(alice.key.bits == std::vector<std::uint8_t>{1, 0});
  CHECK(alice.key.pulse_indices == std::vector<std::uint64_t>{3, 9});

  const auto bob = bob_sift(reported_outcomes(outcomes), alice.mask);
  CHECK(bob == alice.key);
}

TEST_CASE("about half of the detections survive sifting") {
  const Toy t = toy(200'000, 1);
  const auto report = bob_detection_report(t.outcomes);
  const auto alice = alice_match(t.train, report);
  const auto bob = bob_sift(reported_outcomes(t.outcomes), alice.mask);
  CHECK(oracle::binomial_ok(static_cast<double>(alice.key.size()), 200'000.0, 0.5));
  CHECK(bob == alice.key);

  // The source-backed overload agrees with an explicit train.
  const PulseSource source(SourceConfig{});
  const auto train = build_pulse_train(SourceConfig{}, 1'000);
  DetectionReport r;
  for (std::uint64_t i = 0; i < 1'000; i += 3) {
    r.pulse_indices.push_back(i);
    r.bases.push_back(static_cast<Basis>(i & 1U));
  }
  const auto from_source = alice_match(source, 1'000, r);
  const auto from_train = alice_match(train, r);
  CHECK(from_source.mask == from_train.mask);
  CHECK(from_source.key == from_train.key);
}

TEST_CASE("malformed detection reports are protocol violations") {
  const auto train = build_pulse_train(SourceConfig{}, 10);
  CHECK_THROWS_AS(alice_match(train, {{10}, {Basis::rectilinear}}), ProtocolViolation);
  CHECK_THROWS_AS(alice_match(train, {{4, 4}, {Basis::rectilinear, Basis::diagonal}}), ProtocolViolation);
  CHECK_THROWS_AS(alice_match(train, {{5, 2}, {Basis::rectilinear, Basis::diagonal}}), ProtocolViolation);
  CHECK_THROWS_AS(alice_match(train, {{1, 2}, {Basis::rectilinear}}), ProtocolViolation);
  const std::vector<PulseOutcome> two{single(1, Detector::H), single(2, Detector::V)};
  CHECK_THROWS_AS(bob_sift(two, MatchMask{{1}}), ProtocolViolation);
}

TEST_CASE("flipping 5% of Bob's key gives a QBER of exactly 0.05") {
  SiftedKey alice;
  for (std::uint64_t i = 0; i < 10'000; ++i) {
    alice.bits.push_back(static_cast<std::uint8_t>((i * 7) % 3 == 0));
    alice.pulse_indices.push_back(i * 2);
  }
  SiftedKey bob = alice;
  for (std::size_t i = 0; i < bob.size(); i += 20) bob.bits[i] ^= 1U;
  SessionParams params;
  Engine rng = make_engine(1);
  const auto q = estimate_qber(alice, bob, params, rng);
  CHECK(q.disclosed == 10'000);
  CHECK(q.errors == 500);
  CHECK(q.qber == 0.05);
  CHECK_FALSE(q.abort);
  CHECK(alice.size() == 0);
  CHECK(bob.size() == 0);
}

TEST_CASE("identical keys give zero QBER and keep the undisclosed part") {
  SiftedKey alice;
  for (std::uint64_t i = 0; i < 1'001; ++i) {
    alice.bits.push_back(static_cast<std::uint8_t>(i & 1U));
    alice.pulse_indices.push_back(i);
  }
  SiftedKey bob = alice;
  SessionParams params;
  params.sample_fraction = 0.1;
  Engine rng = make_engine(2);
  const auto q = estimate_qber(alice, bob, params, rng);
  CHECK(q.disclosed == 101);
  CHECK(q.errors == 0);
  CHECK(q.qber == 0.0);
  CHECK(alice.size() == 900);
  CHECK(alice == bob);
}

TEST_CASE("sample positions") {
  SessionParams params;
  Engine rng = make_engine(3);
  const auto all = select_sample_positions(5, params, rng);
  CHECK(all == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  params.sample_fraction = 0.25;
  const auto some = select_sample_positions(1'000, params, rng);
  CHECK(some.size() == 250);
  CHECK(std::is_sorted(some.begin(), some.end()));
  CHECK(std::adjacent_find(some.begin(), some.end()) == some.end());
  CHECK(some.back() < 1'000);
  Engine again = make_engine(3);
  select_sample_positions(5, SessionParams{}, again);
  CHECK(select_sample_positions(1'000, params, again) == some);
}

TEST_CASE("abort threshold is strict") {
  SiftedKey key{{0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  const std::vector<std::uint64_t> pos{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  SampleBits one_wrong{{1, 0, 0, 0, 0, 0, 0, 0, 0, 0}};
  CHECK_FALSE(evaluate_sample(key, pos, one_wrong, 0.10).abort);
  SampleBits two_wrong{{1, 1, 0, 0, 0, 0, 0, 0, 0, 0}};
  CHECK(evaluate_sample(key, pos, two_wrong, 0.10).abort);
  CHECK_THROWS_AS(evaluate_sample(key, {}, SampleBits{}, 0.1), InconclusiveSession);
  const std::vector<std::uint64_t> bad{3, 2};
  CHECK_THROWS_AS(evaluate_sample(key, bad, SampleBits{{0, 0}}, 0.1), ProtocolViolation);
  const std::vector<std::uint64_t> past{10};
  CHECK_THROWS_AS(evaluate_sample(key, past, SampleBits{{0}}, 0.1), ProtocolViolation);
  CHECK_THROWS_AS(disclose(key, past), ProtocolViolation);
}

TEST_CASE("empty keys are inconclusive") {
  SiftedKey a;
  SiftedKey b;
  Engine rng = make_engine(4);
  CHECK_THROWS_AS(estimate_qber(a, b, SessionParams{}, rng), InconclusiveSession);
}
