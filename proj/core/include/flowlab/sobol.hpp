#pragma once

#include <cstdint>
#include <vector>

namespace flowlab {

/// Sobol' low-discrepancy sequence (Joe-Kuo direction numbers, 53-bit,
/// Gray-code order; point 0 is the origin). Supports up to 32 dimensions.
/// An optional per-dimension digital shift (XOR with seed-derived bits)
/// randomizes the net while preserving its equidistribution.
class SobolSequence {
 public:
  static constexpr int kMaxDim = 32;
  static constexpr int kBits = 53;

  explicit SobolSequence(int dim, uint64_t shift_seed = 0, uint64_t shift_stream = 0,
                         bool digital_shift = false);

  int dim() const { return dim_; }

  /// Writes the next point into out[0..dim); values in [0,1).
  void next(double* out);

  /// Jumps so that the following next() returns point `index`.
  void seek(uint64_t index);

 private:
  int dim_;
  uint64_t count_ = 0;
  std::vector<uint64_t> state_;  // current integer point, 53 bits per dim
  std::vector<uint64_t> shift_;
  std::vector<std::vector<uint64_t>> dirs_;  // [dim][kBits]
};

}  // namespace flowlab
