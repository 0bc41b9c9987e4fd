#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkd {

/// Sequential engine used for every stochastic pass that runs in stream order.
using Engine = std::mt19937_64;

/// splitmix64 output function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Maps the top 53 bits of a word onto [0, 1).
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/**
 * Counter-based random stream: the value at counter `i` depends only on
 * (seed, i). Used where random access by pulse index is needed, so a pulse
 * train of 10^9 entries never has to be materialised and shards can be
 * processed in any order with identical results.
 */
class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t seed) : key_(splitmix64(seed)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key_ + counter * 0xD1B54A32D192ED03ULL);
  }
  constexpr double uniform(std::uint64_t counter) const { return unit_interval(bits(counter)); }

 private:
  std::uint64_t key_;
};

/// Child seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);
/// Child seed for a numbered sub-stream (e.g. a shard).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

Engine make_engine(std::uint64_t seed);

/// Standard normal deviate from two independent uniforms (Box-Muller, cosine branch).
double box_muller(double u1, double u2);

}  // namespace qkd
