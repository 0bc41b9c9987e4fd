#include "qkd/rng.hpp"

#include <cmath>
#include <numbers>

#include "qkd/types.hpp"

namespace qkd {

std::string_view to_string(Basis b) { return b == Basis::rectilinear ? "rectilinear" : "diagonal"; }

std::string_view to_string(Detector d) {
  static constexpr std::string_view names[] = {"H", "V", "D", "A"};
  return names[index_of(d)];
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  // FNV-1a over the label, then mixed with the base seed.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(splitmix64(base) ^ h);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) + splitmix64(index ^ 0xA0761D6478BD642FULL));
}

Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

double box_muller(double u1, double u2) {
  // u1 in [0,1): shift away from zero so the log stays finite.
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qkd
