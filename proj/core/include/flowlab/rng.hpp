#pragma once

#include <array>
#include <cstdint>

namespace flowlab::rng {

// Philox4x32-10 counter-based generator. A draw is a pure function of
// (seed, stream, index): no state, any draw can be regenerated in any order,
// which is what makes coupled-path replay and parallel determinism trivial.
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key);

/// Uniform double in the open interval (0,1).
double uniform01(uint64_t seed, uint64_t stream, uint64_t index);

/// Standard normal draw, Phi^{-1}(uniform01(...)).
double normal(uint64_t seed, uint64_t stream, uint64_t index);

/// Raw 64 uniform bits for the same keying.
uint64_t bits64(uint64_t seed, uint64_t stream, uint64_t index);

/// Inverse standard normal CDF (Acklam rational approximation + one Halley
/// refinement against erfc; accurate to ~1 ulp over (0,1)).
double inverse_normal_cdf(double u);

// Stream-id tags keep the independent uses of a single user seed apart.
inline constexpr uint64_t kStreamTagSampler = uint64_t{1} << 62;
inline constexpr uint64_t kStreamTagShift = uint64_t{2} << 62;
inline constexpr uint64_t kStreamTagBootstrap = uint64_t{3} << 62;

}  // namespace flowlab::rng
