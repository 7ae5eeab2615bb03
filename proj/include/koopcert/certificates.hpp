#pragma once

#include "koopcert/lifting.hpp"
#include "koopcert/standardize.hpp"
#include "koopcert/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace koopcert {

/// Multiscale parameters for the data-quality certificates. rho_max is the
/// non-clustering reference density; a value <= 0 means "calibrate from a
/// fixed-seed uniform-ball sample of the given dimension".
struct CertificateConfig {
  std::vector<double> delta = {M_PI / 2.0, M_PI / 4.0, M_PI / 8.0};
  std::vector<double> m_star = {4.0, 8.0, 16.0};
  std::vector<double> radii = {0.25, 0.5, 1.0};
  int s = 2;  // reference dimension (state dimension)
  double rho_max = 0.0;
  int radial_bins = 10;
  double tau_state = 0.20;
  double tau_lift = 0.05;
  double tau_reg = 0.05;
  double eps = 1e-9;
  double var_threshold = 1e-10;
  double rank_tol = 1e-8;

  /// Copy with s = n_x and rho_max calibrated (cached per dimension).
  CertificateConfig resolved_for_dimension(int n_x) const;
};

/// Density reference for C_fr: max over the configured scales of rho(r) on a
/// 4096-point fixed-seed sample drawn uniformly from the ball of radius
/// sqrt(s+2) (which has identity covariance, like whitened data).
double calibrate_rho_max(int s, const std::vector<double>& radii, double eps);

/// Affine map taking the fitted sample to zero mean / identity covariance.
struct WhitenTransform {
  VectorXd mean;
  MatrixXd W;  // symmetric whitening matrix
  bool ridged = false;

  MatrixXd apply(const MatrixXd& X) const;
  VectorXd apply_direction(const VectorXd& d) const { return W * d; }
};

WhitenTransform fit_whitener(const MatrixXd& X, double eps);
MatrixXd whiten_states(const MatrixXd& X, double eps = 1e-9);

double directional_coverage(const Dataset& dataset,
                            const CertificateConfig& cfg);

/// Greedy delta-separated direction set, first-accept in sample order.
/// Rows of dirs must be unit vectors.
std::vector<int> greedy_direction_set(const MatrixXd& dirs, double delta);

double frostman_noncluster(const MatrixXd& X_whitened,
                           const CertificateConfig& cfg);

/// Max over sample centers of the C_fr ball-count density at one scale.
double local_density(const MatrixXd& X_whitened, double r, int s, double eps);

double radial_coverage(const MatrixXd& X_whitened,
                       const CertificateConfig& cfg);

struct IsotropyResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double logdet = 0.0;
};

/// Spectral summary of the normalized Gram (1/N) Zbar^T Zbar.
IsotropyResult isotropy(const StandardizedDesign& Z);

struct CertificateReport {
  double c_dir = 0.0;
  double c_fr = 0.0;
  double c_rad = 0.0;
  double c_state = 0.0;
  double c_lift = 0.0;
  double c_reg = 0.0;
  double state_iso = 0.0;
  double lift_iso = 0.0;
  double regression_iso = 0.0;
  double c_gpe = 0.0;
  int active_dim = 0;   // of the regression design
  int active_rank = 0;  // of the regression design
  int lift_active_dim = 0;
  int state_active_dim = 0;
  double sigma_min_bar_phi = 0.0;  // independent SVD route
  double regression_logdet = 0.0;
  bool whitening_ridged = false;
  std::string bottleneck;  // layer attaining the composite minimum
};

CertificateReport full_report(const Dataset& dataset, const Dictionary& dict,
                              const CertificateConfig& cfg);

}  // namespace koopcert
