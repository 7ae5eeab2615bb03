#pragma once

#include "koopcert/lifting.hpp"
#include "koopcert/standardize.hpp"
#include "koopcert/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace koopcert {

struct EdmdcThresholds {
  double var_threshold = 1e-10;
  double rank_tol = 1e-8;
};

/// Column bookkeeping needed to move between raw and standardized
/// coordinates after the design matrices themselves are gone.
struct ColumnStats {
  VectorXd mu;
  VectorXd scale;
  std::vector<bool> active_mask;
  std::vector<int> active_cols;
  int active_dim = 0;
  int active_rank = 0;
};

ColumnStats stats_of(const StandardizedDesign& z);

/// Affine one-step map z+ = c + A z + B u in de-standardized lifted
/// coordinates.
struct LiftedLinearModel {
  MatrixXd A;  // d_psi x d_psi
  MatrixXd B;  // d_psi x n_u
  VectorXd c;  // d_psi
};

/// EDMDc coefficient matrix in active standardized coordinates, plus the
/// statistics required to run it on raw data.
struct EdmdcModel {
  MatrixXd Kbar;  // phi_active_dim x y_active_dim
  ColumnStats phi_stats;
  ColumnStats y_stats;
  double lambda = 0.0;
  Dictionary dict;
  int n_u = 0;
  bool rank_deficient = false;  // lambda = 0 solved through a pseudoinverse

  /// De-standardized next-step lifted predictions for raw Phi rows.
  MatrixXd predict_lifted(const MatrixXd& Phi_raw) const;

  LiftedLinearModel affine_dynamics() const;
};

/// Ridge (or, at lambda = 0, rank-revealing least-squares) fit of the
/// standardized regression Ybar = Phibar Kbar. Degeneracy at lambda = 0 is
/// solved through the pseudoinverse and flagged, never hidden by adding
/// regularization.
EdmdcModel fit(const LiftedDesign& design, double lambda,
               const EdmdcThresholds& th = {});

struct OneStepErrors {
  double lift_rmse = 0.0;
  double state_rmse = 0.0;
};

/// Entrywise RMS of the de-standardized one-step residuals; state_rmse
/// restricts to the coordinate monomials (the first n_x dictionary terms).
OneStepErrors one_step_errors(const EdmdcModel& model, const Dataset& dataset);

struct TheoryCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool satisfied = false;
};

/// sigma_min(Phibar) from an SVD against sqrt(N * C_reg) from an
/// eigendecomposition of the normalized Gram; relative gap <= 1e-9.
TheoryCheck check_identity(const MatrixXd& Zbar);
TheoryCheck check_identity(const LiftedDesign& design,
                           const EdmdcThresholds& th = {});

/// lambda_min of the Fisher information Kronecker product against
/// N * C_reg / lambda_max(Sigma_e).
TheoryCheck check_fisher(const MatrixXd& Zbar, const MatrixXd& Sigma_e);
TheoryCheck check_fisher(const LiftedDesign& design, const MatrixXd& Sigma_e,
                         const EdmdcThresholds& th = {});

/// Deterministic ridge error bound. Kstar is computed internally as the
/// lambda = 0 projection of Y_clean onto the design, so Phibar' R = 0 holds
/// by construction; E is added on top of Y_clean.
TheoryCheck check_ridge_bound(const MatrixXd& Zbar, const MatrixXd& Y_clean,
                              const MatrixXd& E, double lambda);

/// Monte Carlo mean of the squared least-squares error against
/// sigma^2 q p / (N C_reg), with a 3/sqrt(trials) slack.
TheoryCheck check_ls_risk(const MatrixXd& Zbar, double sigma, int q,
                          int trials, std::uint64_t seed);

struct PopulationGapResult {
  std::vector<int> n_values;
  std::vector<double> frequencies;  // empirical P{C_reg >= mu/2}
  std::vector<TheoryCheck> checks;
};

/// Uniform-on-sphere regressors scaled so the population Gram is mu * p *
/// I / p = mu I ... i.e. radius sqrt(mu p), lambda_min(G) = mu, |xi| = R.
PopulationGapResult check_population_gap(int p, double mu,
                                         const std::vector<int>& n_list,
                                         int trials, std::uint64_t seed);

struct SchurDiagnostics {
  MatrixXd lifted_gram;    // active lifted block of the normalized Gram
  MatrixXd input_residual; // Schur complement of the input block
  double alpha_hat = 0.0;  // lambda_min of the lifted Gram
  double beta_hat = 0.0;   // lambda_min of the Schur complement
  double c_reg = 0.0;      // lambda_min of the full normalized Gram
  bool used_pinv = false;
};

SchurDiagnostics schur_input_residual(const LiftedDesign& design,
                                      const EdmdcThresholds& th = {});

/// Interlacing direction C_reg <= min(alpha_hat, beta_hat) as a TheoryCheck.
TheoryCheck schur_interlacing_check(const SchurDiagnostics& d);

}  // namespace koopcert
