#include "koopcert/edmdc.hpp"

#include "koopcert/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace koopcert {

namespace {

double lambda_min_gram(const MatrixXd& Zbar) {
  const MatrixXd gram =
      Zbar.transpose() * Zbar / static_cast<double>(Zbar.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  return es.eigenvalues().minCoeff();
}

MatrixXd pinv_solve(const MatrixXd& A, const MatrixXd& B) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  return cod.solve(B);
}

}  // namespace

ColumnStats stats_of(const StandardizedDesign& z) {
  ColumnStats s;
  s.mu = z.mu;
  s.scale = z.scale;
  s.active_mask = z.active_mask;
  s.active_cols = z.active_cols;
  s.active_dim = z.active_dim;
  s.active_rank = z.active_rank;
  return s;
}

EdmdcModel fit(const LiftedDesign& design, double lambda,
               const EdmdcThresholds& th) {
  if (design.size() == 0) throw std::invalid_argument("fit: empty design");
  if (lambda < 0.0) throw std::invalid_argument("fit: lambda must be >= 0");

  StandardizedDesign zphi;
  try {
    zphi = standardize(design.Phi, th.var_threshold, th.rank_tol);
  } catch (DegenerateDesignError& e) {
    e.set_layer("regression");
    throw;
  }
  const StandardizedDesign zy =
      standardize(design.Y, th.var_threshold, th.rank_tol);

  EdmdcModel model;
  model.lambda = lambda;
  model.dict = design.dict;
  model.n_u = static_cast<int>(design.U.cols());
  model.phi_stats = stats_of(zphi);
  model.y_stats = stats_of(zy);
  model.rank_deficient = zphi.active_rank < zphi.active_dim;

  if (lambda == 0.0) {
    model.Kbar = pinv_solve(zphi.Zbar, zy.Zbar);
  } else {
    const int p = zphi.active_dim;
    const MatrixXd lhs = zphi.Zbar.transpose() * zphi.Zbar +
                         lambda * MatrixXd::Identity(p, p);
    model.Kbar = lhs.llt().solve(zphi.Zbar.transpose() * zy.Zbar);
  }
  if (!model.Kbar.allFinite()) {
    throw std::runtime_error("fit: nonfinite coefficients");
  }
  return model;
}

MatrixXd EdmdcModel::predict_lifted(const MatrixXd& Phi_raw) const {
  const Eigen::Index n = Phi_raw.rows();
  const int d_psi = dict.d_psi;
  MatrixXd phibar(n, phi_stats.active_dim);
  for (int a = 0; a < phi_stats.active_dim; ++a) {
    const int j = phi_stats.active_cols[a];
    phibar.col(a) =
        ((Phi_raw.col(j).array() - phi_stats.mu[j]) / phi_stats.scale[j])
            .matrix();
  }
  const MatrixXd ybar = phibar * Kbar;
  MatrixXd out(n, d_psi);
  int a = 0;
  for (int j = 0; j < d_psi; ++j) {
    if (y_stats.active_mask[j]) {
      out.col(j) =
          (y_stats.mu[j] + y_stats.scale[j] * ybar.col(a).array()).matrix();
      ++a;
    } else {
      out.col(j).setConstant(y_stats.mu[j]);
    }
  }
  return out;
}

LiftedLinearModel EdmdcModel::affine_dynamics() const {
  const int d_psi = dict.d_psi;
  const int p = d_psi + n_u;
  // Linear map over raw [psi(x); u], assembled column by column from the
  // standardized coefficients.
  MatrixXd L = MatrixXd::Zero(d_psi, p);
  VectorXd c(d_psi);
  for (int j = 0; j < d_psi; ++j) {
    if (y_stats.active_mask[j]) {
      int a_j = 0;
      for (int jj = 0; jj < j; ++jj) {
        if (y_stats.active_mask[jj]) ++a_j;
      }
      for (int a_i = 0; a_i < phi_stats.active_dim; ++a_i) {
        const int i = phi_stats.active_cols[a_i];
        L(j, i) = y_stats.scale[j] * Kbar(a_i, a_j) / phi_stats.scale[i];
      }
    }
    c[j] = y_stats.mu[j] - L.row(j).dot(phi_stats.mu);
  }
  LiftedLinearModel m;
  m.A = L.leftCols(d_psi);
  m.B = L.rightCols(n_u);
  m.c = c;
  return m;
}

OneStepErrors one_step_errors(const EdmdcModel& model, const Dataset& dataset) {
  const LiftedDesign design = build_design(dataset, model.dict);
  const MatrixXd pred = model.predict_lifted(design.Phi);
  const MatrixXd err = design.Y - pred;
  const double n = static_cast<double>(err.rows());
  OneStepErrors e;
  e.lift_rmse = err.norm() / std::sqrt(n * model.dict.d_psi);
  e.state_rmse =
      err.leftCols(model.dict.n_x).norm() / std::sqrt(n * model.dict.n_x);
  return e;
}

TheoryCheck check_identity(const MatrixXd& Zbar) {
  TheoryCheck c;
  c.name = "identity";
  Eigen::BDCSVD<MatrixXd> svd(Zbar);
  c.lhs = svd.singularValues().minCoeff();
  const double sigma_max = svd.singularValues().maxCoeff();

  const MatrixXd gram =
      Zbar.transpose() * Zbar / static_cast<double>(Zbar.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  double lam = std::max(es.eigenvalues().minCoeff(), 0.0);
  const double lam_max = es.eigenvalues().maxCoeff();
  // An eigenvalue below machine noise is numerically zero; without this
  // clamp the sqrt amplifies O(eps * lam_max) noise to ~1e-7 on the sigma
  // scale for exactly singular designs.
  if (lam <= 1e-12 * std::max(lam_max, 1e-300)) lam = 0.0;
  c.rhs = std::sqrt(static_cast<double>(Zbar.rows()) * lam);

  const double zero_floor = 1e-10 * std::max(1.0, sigma_max);
  c.margin = std::abs(c.lhs - c.rhs) / std::max({c.lhs, c.rhs, 1e-12});
  c.satisfied =
      c.margin <= 1e-9 || (c.lhs <= zero_floor && c.rhs <= zero_floor);
  return c;
}

TheoryCheck check_identity(const LiftedDesign& design,
                           const EdmdcThresholds& th) {
  return check_identity(
      standardize(design.Phi, th.var_threshold, th.rank_tol).Zbar);
}

TheoryCheck check_fisher(const MatrixXd& Zbar, const MatrixXd& Sigma_e) {
  if (Sigma_e.rows() != Sigma_e.cols()) {
    throw std::invalid_argument("check_fisher: Sigma_e must be square");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sigma_e);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("check_fisher: Sigma_e must be SPD");
  }
  const double sig_max = es.eigenvalues().maxCoeff();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eg(Zbar.transpose() * Zbar);
  const double gram_min = eg.eigenvalues().minCoeff();

  TheoryCheck c;
  c.name = "fisher";
  c.lhs = (1.0 / sig_max) * gram_min;  // Kronecker eigenvalue product
  const double c_reg = lambda_min_gram(Zbar);
  c.rhs = static_cast<double>(Zbar.rows()) * c_reg / sig_max;
  c.margin = c.lhs - c.rhs;
  c.satisfied = c.margin >= -1e-9 * std::max(1.0, std::abs(c.rhs));
  return c;
}

TheoryCheck check_fisher(const LiftedDesign& design, const MatrixXd& Sigma_e,
                         const EdmdcThresholds& th) {
  return check_fisher(
      standardize(design.Phi, th.var_threshold, th.rank_tol).Zbar, Sigma_e);
}

TheoryCheck check_ridge_bound(const MatrixXd& Zbar, const MatrixXd& Y_clean,
                              const MatrixXd& E, double lambda) {
  const double n = static_cast<double>(Zbar.rows());
  const MatrixXd Kstar = pinv_solve(Zbar, Y_clean);
  const MatrixXd Y = Y_clean + E;

  MatrixXd Khat;
  const int p = static_cast<int>(Zbar.cols());
  if (lambda == 0.0) {
    Khat = pinv_solve(Zbar, Y);
  } else {
    const MatrixXd lhs =
        Zbar.transpose() * Zbar + lambda * MatrixXd::Identity(p, p);
    Khat = lhs.llt().solve(Zbar.transpose() * Y);
  }

  TheoryCheck c;
  c.name = "ridge_bound";
  c.lhs = (Khat - Kstar).norm();
  const double c_reg = std::max(lambda_min_gram(Zbar), 0.0);
  c.rhs = ((Zbar.transpose() * E).norm() + lambda * Kstar.norm()) /
          (n * c_reg + lambda);
  c.margin = c.rhs - c.lhs;
  c.satisfied = c.lhs <= c.rhs + 1e-9 * std::max(1.0, std::abs(c.rhs));
  return c;
}

TheoryCheck check_ls_risk(const MatrixXd& Zbar, double sigma, int q,
                          int trials, std::uint64_t seed) {
  if (trials < 1000) {
    throw std::invalid_argument("check_ls_risk: trials must be >= 1000");
  }
  const double n = static_cast<double>(Zbar.rows());
  const int p = static_cast<int>(Zbar.cols());
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Zbar);
  if (cod.rank() < p) {
    throw std::invalid_argument("check_ls_risk: design must have full rank");
  }

  Rng rng(seed);
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    const MatrixXd E = sigma * rng.normal_mat(static_cast<int>(n), q);
    acc += cod.solve(E).squaredNorm();  // Khat - Kstar = pinv(Zbar) E
  }

  TheoryCheck c;
  c.name = "ls_risk";
  c.lhs = acc / trials;
  const double c_reg = lambda_min_gram(Zbar);
  c.rhs = sigma * sigma * q * p / (n * c_reg);
  c.margin = c.rhs * (1.0 + 3.0 / std::sqrt(static_cast<double>(trials))) -
             c.lhs;
  c.satisfied = c.margin >= 0.0;
  return c;
}

PopulationGapResult check_population_gap(int p, double mu,
                                         const std::vector<int>& n_list,
                                         int trials, std::uint64_t seed) {
  if (p < 2 || mu <= 0.0) {
    throw std::invalid_argument("check_population_gap: need p >= 2, mu > 0");
  }
  // xi = sqrt(mu p) * (g / |g|), g standard normal: the population Gram is
  // mu * I and |xi| = sqrt(mu p) =: R exactly.
  const double radius = std::sqrt(mu * p);
  PopulationGapResult res;
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  for (std::size_t li = 0; li < n_list.size(); ++li) {
    const int n = n_list[li];
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(li)}));
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      MatrixXd gram = MatrixXd::Zero(p, p);
      for (int k = 0; k < n; ++k) {
        VectorXd g = rng.normal_vec(p);
        g *= radius / g.norm();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(g);
      }
      gram /= static_cast<double>(n);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(
          MatrixXd(gram.selfadjointView<Eigen::Lower>()));
      if (es.eigenvalues().minCoeff() >= mu / 2.0) ++hits;
    }
    const double freq = static_cast<double>(hits) / trials;
    res.n_values.push_back(n);
    res.frequencies.push_back(freq);

    TheoryCheck c;
    c.name = "population_gap_N" + std::to_string(n);
    c.lhs = freq;
    c.rhs = 0.95;
    c.margin = freq - 0.95;
    c.satisfied = (n == n_max) ? (freq >= 0.95) : true;
    res.checks.push_back(c);
  }
  return res;
}

SchurDiagnostics schur_input_residual(const LiftedDesign& design,
                                      const EdmdcThresholds& th) {
  StandardizedDesign zphi;
  try {
    zphi = standardize(design.Phi, th.var_threshold, th.rank_tol);
  } catch (DegenerateDesignError& e) {
    e.set_layer("regression");
    throw;
  }
  const int d_psi = design.dict.d_psi;

  std::vector<int> lifted_idx, input_idx;
  for (int a = 0; a < zphi.active_dim; ++a) {
    (zphi.active_cols[a] < d_psi ? lifted_idx : input_idx).push_back(a);
  }
  if (lifted_idx.empty() || input_idx.empty()) {
    throw DegenerateDesignError(
        "schur_input_residual: need active lifted and input columns");
  }

  const MatrixXd gram = zphi.Zbar.transpose() * zphi.Zbar /
                        static_cast<double>(zphi.Zbar.rows());
  const auto block = [&](const std::vector<int>& rows,
                         const std::vector<int>& cols) {
    MatrixXd b(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        b(i, j) = gram(rows[i], cols[j]);
    return b;
  };

  SchurDiagnostics d;
  d.lifted_gram = block(lifted_idx, lifted_idx);
  const MatrixXd guu = block(input_idx, input_idx);
  const MatrixXd gup = block(input_idx, lifted_idx);

  Eigen::SelfAdjointEigenSolver<MatrixXd> ea(d.lifted_gram);
  d.alpha_hat = ea.eigenvalues().minCoeff();

  const double cond_floor = 1e-12 * std::max(ea.eigenvalues().maxCoeff(), 1.0);
  if (d.alpha_hat <= cond_floor) {
    d.used_pinv = true;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(d.lifted_gram);
    d.input_residual = guu - gup * cod.pseudoInverse() * gup.transpose();
  } else {
    d.input_residual =
        guu - gup * d.lifted_gram.llt().solve(gup.transpose());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(d.input_residual);
  d.beta_hat = es.eigenvalues().minCoeff();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eg(gram);
  d.c_reg = eg.eigenvalues().minCoeff();
  return d;
}

TheoryCheck schur_interlacing_check(const SchurDiagnostics& d) {
  TheoryCheck c;
  c.name = "schur";
  c.lhs = d.c_reg;
  c.rhs = std::min(d.alpha_hat, d.beta_hat);
  c.margin = c.rhs - c.lhs;
  c.satisfied = c.lhs <= c.rhs + 1e-9;
  return c;
}

}  // namespace koopcert
