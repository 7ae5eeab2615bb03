#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace koopcert {

/// Gray-code Sobol sequence, up to 6 dimensions, classical primitive
/// polynomials and direction numbers. The zero point is never emitted: the
/// first call to next() returns the point at index 1 (0.5 in every
/// coordinate).
class SobolSequence {
 public:
  explicit SobolSequence(int dim);

  Eigen::VectorXd next();
  void skip(std::uint64_t count);

  static constexpr int kMaxDim = 6;

 private:
  int dim_;
  std::uint64_t counter_ = 0;
  std::vector<std::uint32_t> state_;               // per-dimension XOR state
  std::vector<std::vector<std::uint32_t>> dirs_;   // [dim][bit]
};

}  // namespace koopcert
