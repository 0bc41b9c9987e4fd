#include <doctest.h>

#include <cmath>
#include <set>

#include "qkd/rng.hpp"

using namespace qkd;

TEST_CASE("splitmix64 matches the reference output sequence") {
  // First outputs of the reference generator seeded with 0; each call adds
  // the golden-ratio increment to the state before mixing.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(splitmix64(0x9E3779B97F4A7C15ULL) == 0x6E789E6AA1B965F4ULL);
}

TEST_CASE("counter stream is a pure function of seed and counter") {
  const CounterStream a(42);
  const CounterStream b(42);
  const CounterStream c(43);
  int differ = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    CHECK(a.bits(i) == b.bits(i));
    differ += a.bits(i) != c.bits(i);
  }
  CHECK(differ == 1000);
}

TEST_CASE("unit interval stays inside [0, 1)") {
  CHECK(unit_interval(0) == 0.0);
  CHECK(unit_interval(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("derived seeds separate labels and indices") {
  std::set<std::uint64_t> seen;
  for (const char* label : {"source", "channel", "receiver", "protocol", "background"}) {
    seen.insert(derive_seed(7, label));
  }
  for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(7, i));
  CHECK(seen.size() == 105);
  CHECK(derive_seed(7, "source") == derive_seed(7, "source"));
  CHECK(derive_seed(7, "source") != derive_seed(8, "source"));
}

TEST_CASE("engines built from the same seed replay the same stream") {
  Engine a = make_engine(123);
  Engine b = make_engine(123);
  Engine c = make_engine(124);
  bool all_equal = true;
  bool any_equal_c = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    all_equal &= x == b();
    any_equal_c |= x == c();
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_c);
}

TEST_CASE("box-muller deviates have unit normal moments") {
  const CounterStream s(9);
  const int n = 1'000'000;
  double sum = 0.0;
  double sum2 = 0.0;
  int beyond_2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = box_muller(s.uniform(2 * i), s.uniform(2 * i + 1));
    sum += z;
    sum2 += z * z;
    beyond_2 += std::abs(z) > 2.0;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n));
  // Var of the sample variance of a normal is 2/n.
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
  // P(|Z| > 2) = 0.0455.
  const double p = 0.04550026389635842;
  CHECK(std::abs(beyond_2 - n * p) < 3.0 * std::sqrt(n * p * (1 - p)));
}
