#include "koopcert/sobol.hpp"

#include <stdexcept>

namespace koopcert {

namespace {

constexpr int kBits = 30;

// Degrees and encoded interior coefficients of the first six primitive
// polynomials over GF(2), with the standard initial direction numbers.
constexpr int kDeg[SobolSequence::kMaxDim] = {1, 2, 3, 3, 4, 4};
constexpr std::uint32_t kPoly[SobolSequence::kMaxDim] = {0, 1, 1, 2, 1, 4};
constexpr std::uint32_t kInit[4][SobolSequence::kMaxDim] = {
    {1, 1, 1, 1, 1, 1},
    {3, 1, 3, 3, 1, 1},
    {5, 7, 7, 3, 3, 5},
    {15, 11, 5, 15, 13, 9},
};

}  // namespace

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("SobolSequence: dimension out of range");
  }
  state_.assign(dim_, 0);
  dirs_.assign(dim_, std::vector<std::uint32_t>(kBits, 0));
  for (int k = 0; k < dim_; ++k) {
    const int d = kDeg[k];
    for (int j = 0; j < d; ++j) {
      dirs_[k][j] = kInit[j][k] << (kBits - 1 - j);
    }
    for (int j = d; j < kBits; ++j) {
      std::uint32_t v = dirs_[k][j - d];
      v ^= v >> d;
      std::uint32_t poly = kPoly[k];
      for (int l = d - 1; l >= 1; --l) {
        if (poly & 1u) v ^= dirs_[k][j - l];
        poly >>= 1;
      }
      dirs_[k][j] = v;
    }
  }
}

Eigen::VectorXd SobolSequence::next() {
  // Flip the direction of the lowest zero bit of the counter (Gray code).
  std::uint64_t c = counter_++;
  int bit = 0;
  while (c & 1u) {
    c >>= 1;
    ++bit;
  }
  if (bit >= kBits) throw std::runtime_error("SobolSequence: exhausted");
  Eigen::VectorXd x(dim_);
  for (int k = 0; k < dim_; ++k) {
    state_[k] ^= dirs_[k][bit];
    x[k] = static_cast<double>(state_[k]) * 0x1.0p-30;
  }
  return x;
}

void SobolSequence::skip(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) next();
}

}  // namespace koopcert
