#pragma once

#include "koopcert/types.hpp"

#include <vector>

namespace koopcert {

/// Centered, active-column-scaled design. Column statistics use the 1/N
/// (population) convention so the normalized Gram of Zbar has unit diagonal.
/// Columns whose raw variance falls below var_threshold are screened out of
/// Zbar but stay in the mask/means/scales bookkeeping; the active dimension
/// and numerical rank are always reported rather than hidden.
struct StandardizedDesign {
  MatrixXd Zbar;                 // N x active_dim
  VectorXd mu;                   // p
  VectorXd scale;                // p (population std; ~0 for inactive cols)
  std::vector<bool> active_mask; // p
  std::vector<int> active_cols;  // indices of active columns, ascending
  int active_dim = 0;
  int active_rank = 0;
  double var_threshold = 0.0;

  int p() const { return static_cast<int>(active_mask.size()); }
};

StandardizedDesign standardize(const MatrixXd& M, double var_threshold = 1e-10,
                               double rank_tol = 1e-8);

/// Number of singular values above rank_tol times the largest one.
int active_rank(const MatrixXd& Zbar, double rank_tol = 1e-8);

}  // namespace koopcert
