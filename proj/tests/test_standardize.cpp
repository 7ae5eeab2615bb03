#include "koopcert/standardize.hpp"

#include "koopcert/lifting.hpp"
#include "koopcert/rng.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace koopcert;

TEST_CASE("constant column is screened inactive") {
  Rng rng(1);
  MatrixXd m = rng.normal_mat(20, 4);
  m.col(2).setConstant(3.14);
  const StandardizedDesign z = standardize(m);
  CHECK(z.active_dim == 3);
  CHECK_FALSE(z.active_mask[2]);
  CHECK(z.active_mask[0]);
  CHECK(z.Zbar.cols() == 3);
}

TEST_CASE("column (1,2,3) under the population (1/N) convention") {
  MatrixXd m(3, 1);
  m << 1, 2, 3;
  const StandardizedDesign z = standardize(m);
  // mean 2, population variance 2/3: entries are +-sqrt(3/2) around zero.
  const double s = std::sqrt(1.5);
  CHECK(z.Zbar(0, 0) == doctest::Approx(-s).epsilon(1e-12));
  CHECK(z.Zbar(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z.Zbar(2, 0) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("standardized columns have zero mean and unit population std") {
  Rng rng(2);
  MatrixXd m = rng.normal_mat(37, 5);
  m.col(1) *= 100.0;
  m.col(3).array() += 40.0;
  const StandardizedDesign z = standardize(m);
  for (int a = 0; a < z.active_dim; ++a) {
    CHECK(std::abs(z.Zbar.col(a).mean()) <= 1e-10);
    const double var = z.Zbar.col(a).squaredNorm() / 37.0;
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-8);
  }
}

TEST_CASE("cross-set lifted matrix: screening and residual rank deficiency") {
  MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 0, 1, 0, -1;
  const MatrixXd Psi = lift_rows(Dictionary::monomials(2, 2), X);
  const StandardizedDesign z = standardize(Psi);
  CHECK_FALSE(z.active_mask[3]);  // x1 x2 is identically zero on the cross
  CHECK(z.active_dim == 4);

  // Oracle: explicit eigen-decomposition of the active normalized Gram.
  // x1^2 and x2^2 are perfectly anticorrelated after centering, so one
  // eigenvalue vanishes even though screening kept both columns.
  const MatrixXd gram = z.Zbar.transpose() * z.Zbar / 4.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() <= 1e-12);
  CHECK(z.active_rank == 3);
}

TEST_CASE("active_rank counts significant singular values") {
  Rng rng(3);
  MatrixXd q = rng.normal_mat(30, 4);
  const StandardizedDesign z = standardize(q);
  CHECK(active_rank(z.Zbar) == z.active_dim);

  MatrixXd dup = rng.normal_mat(30, 4);
  dup.col(3) = dup.col(1);
  const StandardizedDesign zd = standardize(dup);
  CHECK(zd.active_dim == 4);
  CHECK(zd.active_rank == 3);
}

TEST_CASE("idempotence: standardizing a standardized design is a no-op") {
  Rng rng(4);
  const StandardizedDesign z = standardize(rng.normal_mat(25, 3));
  const StandardizedDesign zz = standardize(z.Zbar);
  CHECK((zz.Zbar - z.Zbar).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mask is stable under row permutation") {
  Rng rng(5);
  MatrixXd m = rng.normal_mat(16, 4);
  m.col(2).setConstant(-1.0);
  const StandardizedDesign z = standardize(m);

  MatrixXd perm(16, 4);
  for (int i = 0; i < 16; ++i) perm.row(i) = m.row((i * 7 + 3) % 16);
  const StandardizedDesign zp = standardize(perm);
  CHECK(z.active_mask == zp.active_mask);
}

TEST_CASE("positive column scaling leaves Zbar unchanged") {
  Rng rng(6);
  MatrixXd m = rng.normal_mat(21, 3);
  const StandardizedDesign z = standardize(m);
  m.col(1) *= 37.5;
  const StandardizedDesign zs = standardize(m);
  CHECK((z.Zbar - zs.Zbar).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("error paths") {
  CHECK_THROWS_AS(standardize(MatrixXd::Zero(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS(standardize(MatrixXd::Ones(10, 3)), DegenerateDesignError);
}

TEST_CASE("removing an exactly zero-variance column never shrinks lambda_min") {
  Rng rng(7);
  const MatrixXd m = rng.normal_mat(40, 5);
  MatrixXd padded(40, 6);
  padded.leftCols(5) = m;
  padded.col(5).setConstant(2.0);

  const auto lam_min = [](const StandardizedDesign& z) {
    const MatrixXd gram =
        z.Zbar.transpose() * z.Zbar / static_cast<double>(z.Zbar.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    return es.eigenvalues().minCoeff();
  };
  CHECK(lam_min(standardize(padded)) ==
        doctest::Approx(lam_min(standardize(m))).epsilon(1e-12));
}
