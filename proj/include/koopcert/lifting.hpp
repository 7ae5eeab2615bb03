#pragma once

#include "koopcert/types.hpp"

#include <vector>

namespace koopcert {

/// Monomial dictionary: every multi-index with total degree in [1, degree],
/// graded-lexicographic order, no constant term (centering absorbs it). The
/// first n_x entries are therefore the state coordinates themselves.
struct Dictionary {
  int n_x = 0;
  int degree = 0;
  std::vector<std::vector<int>> terms;  // exponent multi-indices
  int d_psi = 0;

  static Dictionary monomials(int n_x, int degree);
};

/// Stacked EDMDc regression objects: Phi = [Psi, U] and the next-step lifted
/// targets Y, row-aligned with the dataset triples.
struct LiftedDesign {
  MatrixXd Psi;  // N x d_psi
  MatrixXd U;    // N x n_u
  MatrixXd Phi;  // N x (d_psi + n_u)
  MatrixXd Y;    // N x d_psi
  Dictionary dict;

  Eigen::Index size() const { return Phi.rows(); }
  int p() const { return static_cast<int>(Phi.cols()); }
};

VectorXd lift(const Dictionary& dict, const VectorXd& x);

/// Evaluates the dictionary on every row of a state matrix.
MatrixXd lift_rows(const Dictionary& dict, const MatrixXd& X);

LiftedDesign build_design(const Dataset& dataset, const Dictionary& dict);

}  // namespace koopcert
