#include "koopcert/theory_suite.hpp"

#include "koopcert/rng.hpp"

#include <Eigen/QR>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace koopcert {

namespace {

MatrixXd random_standardized_design(int n, int p, Rng& rng) {
  return standardize(rng.normal_mat(n, p)).Zbar;
}

MatrixXd random_spd(int q, Rng& rng) {
  const MatrixXd a = rng.normal_mat(q, q);
  return a * a.transpose() + 0.1 * MatrixXd::Identity(q, q);
}

// Design with exactly orthonormal columns scaled so Zbar' Zbar = N I.
MatrixXd orthonormal_design(int n, int p, Rng& rng) {
  const MatrixXd g = rng.normal_mat(n, p);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  const MatrixXd q = MatrixXd(qr.householderQ()).leftCols(p);
  return std::sqrt(static_cast<double>(n)) * q;
}

TheoryCheck named(TheoryCheck c, const std::string& name) {
  c.name = name;
  return c;
}

}  // namespace

std::vector<TheoryCheck> run_theory_suite(const HarnessConfig& cfg,
                                          std::uint64_t seed) {
  std::vector<TheoryCheck> checks;
  Rng rng(derive_seed(seed, {0x7EAC}));

  // Identity sigma_min(Phibar) = sqrt(N C_reg): random, rank-deficient, and
  // acquired designs.
  {
    checks.push_back(named(
        check_identity(random_standardized_design(200, 10, rng)),
        "identity_random"));

    MatrixXd m = rng.normal_mat(100, 6);
    m.col(5) = m.col(4);  // duplicated column: both routes must agree at 0
    checks.push_back(named(check_identity(standardize(m).Zbar),
                           "identity_rank_deficient"));
  }

  // Fisher bound: tight for isotropic noise, satisfied for random SPD.
  {
    const MatrixXd z = random_standardized_design(150, 8, rng);
    const MatrixXd iso = 0.5 * MatrixXd::Identity(5, 5);
    TheoryCheck c = named(check_fisher(z, iso), "fisher_isotropic");
    checks.push_back(c);
    for (int t = 0; t < 100; ++t) {
      const MatrixXd z_t = random_standardized_design(80, 6, rng);
      checks.push_back(named(check_fisher(z_t, random_spd(4, rng)),
                             "fisher_spd_" + std::to_string(t)));
    }
  }

  // Deterministic ridge bound, 100 random trials mixing lambda values and
  // unrepresentable target components.
  {
    const double lambdas[] = {0.0, 0.1, 1.0, 10.0};
    for (int t = 0; t < 100; ++t) {
      const int n = 120, p = 8, q = 3;
      const MatrixXd z = random_standardized_design(n, p, rng);
      const MatrixXd k_plant = rng.normal_mat(p, q);
      MatrixXd resid = rng.normal_mat(n, q);
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(z);
      resid -= z * cod.solve(resid);  // orthogonal to the column space
      const MatrixXd y_clean = z * k_plant + resid;
      const MatrixXd e = 0.1 * rng.normal_mat(n, q);
      checks.push_back(named(check_ridge_bound(z, y_clean, e, lambdas[t % 4]),
                             "ridge_bound_" + std::to_string(t)));
    }
  }

  // Least-squares risk bound on an orthonormal design (exactly tight).
  {
    const MatrixXd z = orthonormal_design(100, 6, rng);
    checks.push_back(named(check_ls_risk(z, 0.5, 3, 5000, rng.next_u64()),
                           "ls_risk_orthonormal"));
  }

  // Population-to-sample spectral gap for the known-Gram sphere family.
  {
    const int p = 6;
    const double mu = 1.0 / p;
    const int n_big = static_cast<int>(
        std::ceil(200.0 * p * std::log(static_cast<double>(p))));
    const auto gap =
        check_population_gap(p, mu, {p, n_big}, 500, rng.next_u64());
    for (const auto& c : gap.checks) checks.push_back(c);
  }

  // Schur input-residual diagnostics on freshly acquired designs.
  for (const auto& [name, sys] : cfg.systems) {
    const MethodSpec m = make_method(MethodId::RANDOM, 0);
    const Dataset data = acquire(m, sys.spec, 8, 12, 0.01,
                                 cfg.acquire_config(name));
    const LiftedDesign design =
        build_design(data, Dictionary::monomials(sys.spec.n_x,
                                                 sys.dict_degree));
    const EdmdcThresholds th{cfg.certs.var_threshold, cfg.certs.rank_tol};
    checks.push_back(named(
        schur_interlacing_check(schur_input_residual(design, th)),
        "schur_" + name));
  }

  return checks;
}

void write_theory_csv(const std::vector<TheoryCheck>& checks,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "name,lhs,rhs,margin,satisfied\n";
  for (const auto& c : checks) {
    out << c.name << "," << format_double(c.lhs) << "," << format_double(c.rhs)
        << "," << format_double(c.margin) << "," << (c.satisfied ? 1 : 0)
        << "\n";
  }
}

}  // namespace koopcert
