#include "flowlab/rng.hpp"

#include <cmath>

namespace flowlab::rng {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void philox_round(std::array<uint32_t, 4>& ctr, const std::array<uint32_t, 2>& key) {
  const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * ctr[0];
  const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * ctr[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key) {
  std::array<uint32_t, 4> ctr = counter;
  std::array<uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k);
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return ctr;
}

uint64_t bits64(uint64_t seed, uint64_t stream, uint64_t index) {
  const std::array<uint32_t, 4> ctr = {
      static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32),
      static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
  const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed),
                                       static_cast<uint32_t>(seed >> 32)};
  const auto out = philox4x32(ctr, key);
  return (static_cast<uint64_t>(out[0]) << 32) | out[1];
}

double uniform01(uint64_t seed, uint64_t stream, uint64_t index) {
  // 53 high bits, offset by 1/2 ulp: strictly inside (0,1).
  const uint64_t x = bits64(seed, stream, index);
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

double normal(uint64_t seed, uint64_t stream, uint64_t index) {
  return inverse_normal_cdf(uniform01(seed, stream, index));
}

double inverse_normal_cdf(double u) {
  // Acklam's rational approximation.
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the exact CDF. The residual is formed on the
  // smaller tail (erfc stays relatively accurate there), otherwise the
  // cancellation in 0.5 erfc(-x/sqrt 2) - u near u = 1 would inject noise.
  constexpr double sqrt2pi = 2.5066282746310002;
  double e;
  if (u <= 0.5) {
    e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
  } else {
    e = (1.0 - u) - 0.5 * std::erfc(x / std::sqrt(2.0));
  }
  const double v = e * sqrt2pi * std::exp(0.5 * x * x);
  x -= v / (1.0 + 0.5 * x * v);
  return x;
}

}  // namespace flowlab::rng
