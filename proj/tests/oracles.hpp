#pragma once

// Independent reference computations used by the tests. None of these call
// into the library; they reach the same quantities by a different route.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

/// |observed - expected| within `nsigma` binomial standard deviations.
inline bool binomial_ok(double successes, double trials, double p, double nsigma = 3.0) {
  const double sigma = std::sqrt(trials * p * (1.0 - p));
  return std::abs(successes - trials * p) <= nsigma * sigma;
}

inline bool poisson_ok(double count, double mean, double nsigma = 3.0) {
  return std::abs(count - mean) <= nsigma * std::sqrt(mean);
}

inline double poisson_pmf(unsigned k, double mu) {
  return std::exp(static_cast<double>(k) * std::log(mu) - mu - std::lgamma(k + 1.0));
}

/// Upper-tail p-value of Pearson's statistic with `dof` degrees of freedom.
inline double chi_square_p(std::span<const double> observed, std::span<const double> expected,
                           double dof) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

/// Beam radius from the complex beam parameter of a free-space ABCD propagation.
inline double beam_radius_abcd_cm(double waist_cm, double z_m, double wavelength_nm) {
  const double lambda = wavelength_nm * 1e-9;
  const double w0 = waist_cm * 1e-2;
  const std::complex<double> q0(0.0, std::numbers::pi * w0 * w0 / lambda);
  // Free space: A = 1, B = z, C = 0, D = 1.
  const std::complex<double> q = (1.0 * q0 + z_m) / (0.0 * q0 + 1.0);
  const double im_inv_q = (1.0 / q).imag();
  return std::sqrt(-lambda / (std::numbers::pi * im_inv_q)) * 1e2;
}

/// Power fraction of a Gaussian beam inside a circular aperture, by Simpson quadrature.
inline double aperture_capture(double beam_radius_cm, double aperture_radius_cm) {
  const int n = 20000;
  const double h = aperture_radius_cm / n;
  const auto f = [&](double r) {
    const double w2 = beam_radius_cm * beam_radius_cm;
    return 2.0 / (std::numbers::pi * w2) * std::exp(-2.0 * r * r / w2) * 2.0 * std::numbers::pi * r;
  };
  double sum = f(0.0) + f(aperture_radius_cm);
  for (int i = 1; i < n; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// Fraction of a zero-mean Gaussian inside [-half_width, half_width], by Simpson quadrature.
inline double gaussian_window(double sigma, double half_width) {
  const int n = 20000;
  const double h = 2.0 * half_width / n;
  const auto f = [&](double x) {
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  double sum = f(-half_width) + f(half_width);
  for (int i = 1; i < n; ++i) sum += f(-half_width + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Kim-model values worked by hand for 850 nm:
//   V = 10 km:  q = 1.3,  sigma = 3.91/10 * (850/550)^-1.3 = 0.2222 /km -> 0.965 dB/km
//   V = 2.3 km: q = 0.16*2.3 + 0.34 = 0.708, sigma = 1.700 * 0.7347 = 1.249 /km -> 5.42 dB/km
inline constexpr double kKimV10At850DbPerKm = 0.965;
inline constexpr double kKimV2p3At850DbPerKm = 5.42;

/// Bit-at-a-time reflected CRC-32 (polynomial 0xEDB88320).
inline std::uint32_t crc32_bitwise(std::span<const std::uint8_t> bytes) {
  std::uint32_t crc = 0xFFFFFFFFU;
  for (std::uint8_t b : bytes) {
    crc ^= b;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320U & (0U - (crc & 1U)));
  }
  return ~crc;
}

}  // namespace oracle
