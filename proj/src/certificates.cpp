#include "koopcert/certificates.hpp"

#include "koopcert/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace koopcert {

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

double angle_between(const VectorXd& a, const VectorXd& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

}  // namespace

double calibrate_rho_max(int s, const std::vector<double>& radii, double eps) {
  const int n = 4096;
  // Uniform on the ball of radius sqrt(s+2): direction from a normalized
  // Gaussian, radius from the U^(1/s) law. That ball has identity covariance.
  Rng rng(derive_seed(0xBA11, {static_cast<std::uint64_t>(s)}));
  const double ball_radius = std::sqrt(static_cast<double>(s) + 2.0);
  MatrixXd pts(n, s);
  for (int i = 0; i < n; ++i) {
    VectorXd g = rng.normal_vec(s);
    const double norm = g.norm();
    const double r = ball_radius * std::pow(rng.uniform01(), 1.0 / s);
    pts.row(i) = (norm > 0 ? (r / norm) * g : g).transpose();
  }
  double rho = 0.0;
  for (double r : radii) rho = std::max(rho, local_density(pts, r, s, eps));
  return rho;
}

CertificateConfig CertificateConfig::resolved_for_dimension(int n_x) const {
  CertificateConfig out = *this;
  out.s = n_x;
  if (out.rho_max <= 0.0) {
    struct Key {
      int s;
      std::vector<double> radii;
      double eps;
      bool operator<(const Key& o) const {
        return std::tie(s, radii, eps) < std::tie(o.s, o.radii, o.eps);
      }
    };
    static std::map<Key, double> cache;
    static std::mutex mtx;
    const Key key{n_x, radii, eps};
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, calibrate_rho_max(n_x, radii, eps)).first;
    }
    out.rho_max = it->second;
  }
  return out;
}

MatrixXd WhitenTransform::apply(const MatrixXd& X) const {
  return (X.rowwise() - mean.transpose()) * W.transpose();
}

WhitenTransform fit_whitener(const MatrixXd& X, double eps) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < d + 1) {
    throw std::invalid_argument("fit_whitener: need at least n_x + 1 samples");
  }
  WhitenTransform t;
  t.mean = X.colwise().mean();
  const MatrixXd centered = X.rowwise() - t.mean.transpose();
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  VectorXd evals = es.eigenvalues();
  const double lmax = evals.maxCoeff();
  if (evals.minCoeff() <= eps * std::max(lmax, 1.0)) {
    evals.array() += eps * std::max(lmax, 1.0);
    t.ridged = true;
  }
  // Symmetric (ZCA) whitening.
  t.W = es.eigenvectors() * evals.cwiseInverse().cwiseSqrt().asDiagonal() *
        es.eigenvectors().transpose();
  return t;
}

MatrixXd whiten_states(const MatrixXd& X, double eps) {
  const WhitenTransform t = fit_whitener(X, eps);
  return t.apply(X);
}

std::vector<int> greedy_direction_set(const MatrixXd& dirs, double delta) {
  std::vector<int> accepted;
  for (Eigen::Index k = 0; k < dirs.rows(); ++k) {
    const VectorXd d = dirs.row(k).transpose();
    bool ok = true;
    for (int idx : accepted) {
      if (angle_between(d, dirs.row(idx).transpose()) <= delta) {
        ok = false;
        break;
      }
    }
    if (ok) accepted.push_back(static_cast<int>(k));
  }
  return accepted;
}

namespace {

// Unit whitened displacement directions, in sample order; zero displacements
// carry no direction and are dropped.
MatrixXd displacement_directions(const Dataset& dataset,
                                 const WhitenTransform& wt, double eps) {
  std::vector<VectorXd> dirs;
  for (Eigen::Index k = 0; k < dataset.size(); ++k) {
    const VectorXd disp = wt.apply_direction(
        (dataset.X_next.row(k) - dataset.X.row(k)).transpose());
    const double norm = disp.norm();
    if (norm > eps) dirs.push_back(disp / norm);
  }
  MatrixXd out(static_cast<Eigen::Index>(dirs.size()), dataset.state_dim());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = dirs[i].transpose();
  }
  return out;
}

}  // namespace

double directional_coverage(const Dataset& dataset,
                            const CertificateConfig& cfg) {
  if (dataset.empty()) return 0.0;
  const WhitenTransform wt = fit_whitener(dataset.X, cfg.eps);
  const MatrixXd dirs = displacement_directions(dataset, wt, cfg.eps);
  if (dirs.rows() == 0) return 0.0;
  double c = 1.0;
  for (std::size_t l = 0; l < cfg.delta.size(); ++l) {
    const double m =
        static_cast<double>(greedy_direction_set(dirs, cfg.delta[l]).size());
    c = std::min(c, std::min(m / cfg.m_star[l], 1.0));
  }
  return clip01(c);
}

double local_density(const MatrixXd& X_whitened, double r, int s, double eps) {
  const Eigen::Index n = X_whitened.rows();
  if (n == 0) return 0.0;
  const double r2 = r * r;
  Eigen::Index max_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((X_whitened.row(j) - X_whitened.row(i)).squaredNorm() <= r2) ++count;
    }
    max_count = std::max(max_count, count);
  }
  const double frac = static_cast<double>(max_count) / static_cast<double>(n);
  return frac / (std::pow(r, s) + eps);
}

double frostman_noncluster(const MatrixXd& X_whitened,
                           const CertificateConfig& cfg) {
  if (X_whitened.rows() == 0) return 0.0;
  double c = 1.0;
  for (double r : cfg.radii) {
    const double rho = local_density(X_whitened, r, cfg.s, cfg.eps);
    c = std::min(c, cfg.rho_max / std::max(rho, cfg.eps));
  }
  return clip01(c);
}

double radial_coverage(const MatrixXd& X_whitened,
                       const CertificateConfig& cfg) {
  const Eigen::Index n = X_whitened.rows();
  if (n == 0) return 0.0;
  std::vector<double> radius(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) radius[i] = X_whitened.row(i).norm();
  std::vector<double> sorted = radius;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(n)));
  const double r95 = sorted[std::max<std::size_t>(rank, 1) - 1];
  if (r95 <= 0.0) return 1.0 / cfg.radial_bins;

  std::vector<bool> occupied(static_cast<std::size_t>(cfg.radial_bins), false);
  for (double r : radius) {
    if (r > r95) continue;
    auto bin = static_cast<int>(std::floor(r / r95 * cfg.radial_bins));
    occupied[static_cast<std::size_t>(std::min(bin, cfg.radial_bins - 1))] =
        true;
  }
  const auto hits = std::count(occupied.begin(), occupied.end(), true);
  return static_cast<double>(hits) / cfg.radial_bins;
}

IsotropyResult isotropy(const StandardizedDesign& Z) {
  if (Z.active_dim == 0) {
    throw DegenerateDesignError("isotropy: no active columns");
  }
  const MatrixXd gram = Z.Zbar.transpose() * Z.Zbar /
                        static_cast<double>(Z.Zbar.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  const VectorXd& evals = es.eigenvalues();
  IsotropyResult r;
  r.lambda_min = evals.minCoeff();
  r.lambda_max = evals.maxCoeff();
  r.logdet = 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    r.logdet += std::log(std::max(evals[i], 1e-300));
  }
  return r;
}

CertificateReport full_report(const Dataset& dataset, const Dictionary& dict,
                              const CertificateConfig& cfg_in) {
  if (dataset.empty()) {
    throw std::invalid_argument("full_report: empty dataset");
  }
  const CertificateConfig cfg = cfg_in.resolved_for_dimension(dataset.state_dim());
  CertificateReport rep;

  const WhitenTransform wt = fit_whitener(dataset.X, cfg.eps);
  rep.whitening_ridged = wt.ridged;
  const MatrixXd Xw = wt.apply(dataset.X);

  rep.c_dir = directional_coverage(dataset, cfg);
  rep.c_fr = frostman_noncluster(Xw, cfg);
  rep.c_rad = radial_coverage(Xw, cfg);

  const LiftedDesign design = build_design(dataset, dict);

  auto standardize_layer = [&](const MatrixXd& M, const char* layer) {
    try {
      return standardize(M, cfg.var_threshold, cfg.rank_tol);
    } catch (DegenerateDesignError& e) {
      throw DegenerateDesignError(std::string(e.what()) + " [layer: " + layer +
                                      "]",
                                  layer);
    }
  };

  const StandardizedDesign zx = standardize_layer(dataset.X, "state");
  const StandardizedDesign zpsi = standardize_layer(design.Psi, "lifted");
  const StandardizedDesign zphi = standardize_layer(design.Phi, "regression");

  rep.c_state = isotropy(zx).lambda_min;
  rep.c_lift = isotropy(zpsi).lambda_min;
  const IsotropyResult reg = isotropy(zphi);
  rep.c_reg = reg.lambda_min;
  rep.regression_logdet = reg.logdet;
  rep.state_active_dim = zx.active_dim;
  rep.lift_active_dim = zpsi.active_dim;
  rep.active_dim = zphi.active_dim;
  rep.active_rank = zphi.active_rank;

  rep.state_iso = rep.c_state / cfg.tau_state;
  rep.lift_iso = rep.c_lift / cfg.tau_lift;
  rep.regression_iso = rep.c_reg / cfg.tau_reg;

  // Independent SVD route; the eigen route enters via c_reg. Their agreement
  // is the definitional-identity sanity check.
  Eigen::BDCSVD<MatrixXd> svd(zphi.Zbar);
  rep.sigma_min_bar_phi = svd.singularValues().minCoeff();

  struct Term {
    const char* name;
    double value;
  };
  // Spectral layers take precedence over coverage terms in ties: a dead
  // spectral layer explains every downstream zero, and the earliest dead
  // layer in the pipeline is the root cause.
  const Term terms[] = {{"state", rep.state_iso},   {"lifted", rep.lift_iso},
                        {"regression", rep.regression_iso},
                        {"directional", rep.c_dir}, {"frostman", rep.c_fr},
                        {"radial", rep.c_rad}};
  rep.c_gpe = terms[0].value;
  rep.bottleneck = terms[0].name;
  for (const Term& t : terms) {
    if (t.value < rep.c_gpe) {
      rep.c_gpe = t.value;
      rep.bottleneck = t.name;
    }
  }

  for (double v : {rep.c_dir, rep.c_fr, rep.c_rad, rep.c_state, rep.c_lift,
                   rep.c_reg, rep.state_iso, rep.lift_iso, rep.regression_iso,
                   rep.c_gpe, rep.sigma_min_bar_phi, rep.regression_logdet}) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("full_report: nonfinite certificate value");
    }
  }
  return rep;
}

}  // namespace koopcert
