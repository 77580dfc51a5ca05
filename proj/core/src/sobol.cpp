#include "flowlab/sobol.hpp"

#include <bit>
#include <stdexcept>

#include "flowlab/rng.hpp"

namespace flowlab {

namespace {

// Primitive polynomials (full binary encoding) and initial direction values
// m_1..m_s for dimensions 2..32 of the Joe-Kuo table; dimension 1 is the
// plain van der Corput radical inverse.
constexpr uint32_t kPoly[32] = {1,   3,   7,   11,  13,  19,  25,  37,  41,  47,  55,
                                59,  61,  67,  91,  97,  103, 109, 115, 131, 137, 143,
                                145, 157, 167, 171, 185, 191, 193, 203, 211, 213};

const std::vector<std::vector<uint64_t>> kVinit = {
    {1},
    {1},
    {1, 3},
    {1, 3, 1},
    {1, 1, 1},
    {1, 1, 3, 3},
    {1, 3, 5, 13},
    {1, 1, 5, 5, 17},
    {1, 1, 5, 5, 5},
    {1, 1, 7, 11, 19},
    {1, 1, 5, 1, 1},
    {1, 1, 1, 3, 11},
    {1, 3, 5, 5, 31},
    {1, 3, 3, 9, 7, 49},
    {1, 1, 1, 15, 21, 21},
    {1, 3, 1, 13, 27, 49},
    {1, 1, 1, 15, 7, 5},
    {1, 3, 1, 15, 13, 25},
    {1, 1, 5, 5, 19, 61},
    {1, 3, 7, 11, 23, 15, 103},
    {1, 3, 7, 13, 13, 15, 69},
    {1, 1, 3, 13, 7, 35, 63},
    {1, 3, 5, 9, 1, 25, 53},
    {1, 3, 1, 13, 9, 35, 107},
    {1, 3, 1, 5, 27, 61, 31},
    {1, 1, 5, 11, 19, 41, 61},
    {1, 3, 5, 3, 3, 13, 69},
    {1, 1, 7, 13, 1, 19, 1},
    {1, 3, 7, 5, 13, 19, 59},
    {1, 1, 3, 9, 25, 29, 41},
    {1, 3, 5, 13, 23, 1, 55},
    {1, 3, 7, 3, 13, 59, 17},
};

std::vector<uint64_t> direction_numbers(int d) {
  std::vector<uint64_t> v(SobolSequence::kBits);
  if (d == 0) {
    for (int k = 0; k < SobolSequence::kBits; ++k) v[k] = uint64_t{1} << (52 - k);
    return v;
  }
  const uint32_t poly = kPoly[d];
  const int deg = 31 - std::countl_zero(poly);
  const auto& m = kVinit[d];
  for (int i = 0; i < deg; ++i) v[i] = m[static_cast<size_t>(i)] << (52 - i);
  for (int i = deg; i < SobolSequence::kBits; ++i) {
    uint64_t x = v[i - deg] ^ (v[i - deg] >> deg);
    for (int k = 1; k < deg; ++k) {
      if ((poly >> (deg - k)) & 1u) x ^= v[i - k];
    }
    v[i] = x;
  }
  return v;
}

}  // namespace

SobolSequence::SobolSequence(int dim, uint64_t shift_seed, uint64_t shift_stream,
                             bool digital_shift)
    : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("SobolSequence: dimension must be in [1, 32], got " +
                                std::to_string(dim));
  }
  dirs_.reserve(static_cast<size_t>(dim));
  for (int d = 0; d < dim; ++d) dirs_.push_back(direction_numbers(d));
  state_.assign(static_cast<size_t>(dim), 0);
  shift_.assign(static_cast<size_t>(dim), 0);
  if (digital_shift) {
    for (int d = 0; d < dim; ++d) {
      shift_[static_cast<size_t>(d)] =
          rng::bits64(shift_seed, rng::kStreamTagShift | shift_stream,
                      static_cast<uint64_t>(d)) >>
          11;
    }
  }
}

void SobolSequence::next(double* out) {
  if (count_ > 0) {
    const int c = std::countr_one(count_ - 1);
    for (int d = 0; d < dim_; ++d) state_[static_cast<size_t>(d)] ^= dirs_[static_cast<size_t>(d)][static_cast<size_t>(c)];
  }
  for (int d = 0; d < dim_; ++d) {
    out[d] = static_cast<double>(state_[static_cast<size_t>(d)] ^ shift_[static_cast<size_t>(d)]) * 0x1.0p-53;
  }
  ++count_;
}

void SobolSequence::seek(uint64_t index) {
  // next() advances from the previously emitted point, so park the state on
  // point (index - 1); index 0 resets to the origin.
  if (index == 0) {
    state_.assign(static_cast<size_t>(dim_), 0);
    count_ = 0;
    return;
  }
  const uint64_t gray = (index - 1) ^ ((index - 1) >> 1);
  for (int d = 0; d < dim_; ++d) {
    uint64_t x = 0;
    for (int k = 0; k < kBits; ++k) {
      if ((gray >> k) & 1u) x ^= dirs_[static_cast<size_t>(d)][static_cast<size_t>(k)];
    }
    state_[static_cast<size_t>(d)] = x;
  }
  count_ = index;
}

}  // namespace flowlab
