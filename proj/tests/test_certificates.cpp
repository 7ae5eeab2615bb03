#include "koopcert/certificates.hpp"

#include "koopcert/rng.hpp"
#include "koopcert/systems.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace koopcert;

namespace {

Dataset cross_set_self_loops() {
  Dataset d;
  d.X.resize(4, 2);
  d.X << 1, 0, -1, 0, 0, 1, 0, -1;
  d.X_next = d.X;
  d.U = MatrixXd::Zero(4, 1);
  return d;
}

MatrixXd covariance(const MatrixXd& x) {
  const MatrixXd c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows());
}

double deg(double d) { return d * M_PI / 180.0; }

}  // namespace

TEST_CASE("whiten_states produces identity covariance") {
  Rng rng(11);
  const MatrixXd x = rng.normal_mat(10000, 3);
  const MatrixXd xw = whiten_states(x);
  CHECK((covariance(xw) - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
        0.05);
  CHECK(xw.colwise().mean().cwiseAbs().maxCoeff() <= 1e-8);

  // Whitening an already-fit sample is exact, not just statistical.
  const MatrixXd xww = whiten_states(xw);
  CHECK((covariance(xww) - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
        1e-8);
}

TEST_CASE("whiten_states is affine-invariant up to rotation") {
  Rng rng(12);
  const MatrixXd w = rng.normal_mat(5000, 2);
  MatrixXd t(2, 2);
  t << 3.0, 1.0, -0.5, 0.25;
  MatrixXd x = w * t.transpose();
  x.rowwise() += Eigen::RowVector2d(5.0, -2.0);
  const MatrixXd xw = whiten_states(x);
  CHECK((covariance(xw) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <=
        1e-8);
}

TEST_CASE("rank-deficient data takes the ridged fallback") {
  MatrixXd line(50, 2);
  for (int i = 0; i < 50; ++i) line.row(i) << i * 0.1, i * 0.2;
  const WhitenTransform t = fit_whitener(line, 1e-9);
  CHECK(t.ridged);
  CHECK(t.apply(line).allFinite());
}

TEST_CASE("greedy direction separation on the four-axis configuration") {
  MatrixXd dirs(4, 2);
  dirs << 1, 0, 0, 1, -1, 0, 0, -1;  // 0, 90, 180, 270 degrees
  CHECK(greedy_direction_set(dirs, deg(80)).size() == 4);
  // 100 degrees: 90-degree neighbours are rejected, the antipode survives.
  const auto accepted = greedy_direction_set(dirs, deg(100));
  CHECK(accepted == std::vector<int>{0, 2});
}

TEST_CASE("directional_coverage on crafted datasets") {
  CertificateConfig cfg;
  cfg.rho_max = 1.0;

  // States with exactly identity covariance so whitening is the identity
  // and the displacement angles survive untouched.
  Dataset d;
  d.X.resize(4, 2);
  d.X << 1, 1, 1, -1, -1, 1, -1, -1;
  MatrixXd disp(4, 2);
  disp << 0.1, 0, 0, 0.1, -0.1, 0, 0, -0.1;
  d.X_next = d.X + disp;
  d.U = MatrixXd::Zero(4, 1);

  cfg.delta = {deg(80)};
  cfg.m_star = {4};
  CHECK(directional_coverage(d, cfg) == doctest::Approx(1.0));

  cfg.delta = {deg(100)};
  CHECK(directional_coverage(d, cfg) == doctest::Approx(0.5));

  // All displacements identical: one direction at every resolution.
  Dataset same = d;
  same.X_next = same.X;
  same.X_next.col(0).array() += 0.1;
  cfg.delta = {M_PI / 2, M_PI / 4, M_PI / 8};
  cfg.m_star = {4, 8, 16};
  CHECK(directional_coverage(same, cfg) == doctest::Approx(1.0 / 16.0));

  // Self-loops carry no direction at all.
  CHECK(directional_coverage(cross_set_self_loops(), cfg) == 0.0);
}

TEST_CASE("frostman certificate closed forms") {
  CertificateConfig cfg;
  cfg.s = 2;
  cfg.rho_max = 0.25;

  // Single point: rho(r) = 1 / (r^s + eps) at every scale.
  MatrixXd one(1, 2);
  one << 0.3, -0.2;
  double expected = 1.0;
  for (double r : cfg.radii) {
    expected = std::min(expected, cfg.rho_max * (std::pow(r, 2) + cfg.eps));
  }
  CHECK(frostman_noncluster(one, cfg) == doctest::Approx(expected));

  // N identical points behave like one: the minimum sits at the smallest
  // scale.
  const MatrixXd many = one.replicate(40, 1);
  CHECK(frostman_noncluster(many, cfg) == doctest::Approx(expected));
  const double r_min = *std::min_element(cfg.radii.begin(), cfg.radii.end());
  CHECK(expected == doctest::Approx(cfg.rho_max * (r_min * r_min + cfg.eps)));
}

TEST_CASE("grid beats cluster on the non-clustering certificate") {
  CertificateConfig cfg;
  cfg.s = 2;
  cfg.rho_max = 0.25;
  MatrixXd grid(100, 2);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      grid.row(10 * i + j) << (i - 4.5) * 0.5, (j - 4.5) * 0.5;
    }
  }
  Rng rng(13);
  const MatrixXd cluster = 0.01 * rng.normal_mat(100, 2);
  CHECK(frostman_noncluster(grid, cfg) >
        frostman_noncluster(cluster, cfg));
}

TEST_CASE("radial coverage shells") {
  CertificateConfig cfg;
  cfg.s = 2;

  // Everything on one circle: a single occupied shell.
  MatrixXd circle(36, 2);
  for (int i = 0; i < 36; ++i) {
    const double a = 2.0 * M_PI * i / 36.0;
    circle.row(i) << 2.0 * std::cos(a), 2.0 * std::sin(a);
  }
  CHECK(radial_coverage(circle, cfg) == doctest::Approx(0.1));

  // One radius per shell covers everything.
  MatrixXd spread(10, 2);
  for (int i = 0; i < 10; ++i) {
    const double r = (i + 0.5) / 10.0;
    spread.row(i) << r, 0.0;
  }
  CHECK(radial_coverage(spread, cfg) == doctest::Approx(1.0));

  // Uniform radii fill all ten shells with overwhelming probability.
  Rng rng(14);
  MatrixXd uniform(1000, 2);
  for (int i = 0; i < 1000; ++i) {
    const double r = 3.0 * rng.uniform01();
    const double a = 2.0 * M_PI * rng.uniform01();
    uniform.row(i) << r * std::cos(a), r * std::sin(a);
  }
  CHECK(radial_coverage(uniform, cfg) == doctest::Approx(1.0));

  // Degenerate: all points at the origin.
  CHECK(radial_coverage(MatrixXd::Zero(5, 2), cfg) == doctest::Approx(0.1));
}

TEST_CASE("isotropy spectral summaries") {
  Rng rng(15);

  // Perfectly correlated pair.
  MatrixXd m(30, 2);
  m.col(0) = rng.normal_vec(30);
  m.col(1) = 2.0 * m.col(0);
  CHECK(isotropy(standardize(m)).lambda_min <= 1e-12);

  // Marchenko-Pastur sanity: iid normal design near unit isotropy.
  const MatrixXd big = rng.normal_mat(20000, 10);
  const IsotropyResult iso = isotropy(standardize(big));
  CHECK(iso.lambda_min >= 0.9);
  CHECK(iso.lambda_min <= 1.1);
  CHECK(iso.lambda_max >= iso.lambda_min);

  // Cross set, unscreened raw Grams are singular for both layers.
  const LiftedDesign design =
      build_design(cross_set_self_loops(), Dictionary::monomials(2, 2));
  {
    const MatrixXd gram = design.Psi.transpose() * design.Psi / 4.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() <= 1e-12);
  }
  {
    const MatrixXd gram = design.Phi.transpose() * design.Phi / 4.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() <= 1e-12);
  }
}

TEST_CASE("full_report separates layers and names the bottleneck") {
  CertificateConfig cfg;

  // Points on the hyperbola x1 x2 = 1: only that lifted column dies, the
  // state layer keeps full active dimension.
  Dataset hyp;
  hyp.X.resize(12, 2);
  for (int i = 0; i < 12; ++i) {
    const double t = 0.4 + 0.25 * i;
    hyp.X.row(i) << t, 1.0 / t;
  }
  hyp.X_next = hyp.X * 1.05;
  hyp.U = MatrixXd::Zero(12, 1);
  for (int i = 0; i < 12; ++i) hyp.U(i, 0) = (i % 3) - 1.0;
  const CertificateReport rep =
      full_report(hyp, Dictionary::monomials(2, 2), cfg);
  CHECK(rep.state_active_dim == 2);
  CHECK(rep.lift_active_dim == 4);  // x1 x2 screened out of 5

  // The cross set bottleneck is the lifted layer.
  const CertificateReport cross =
      full_report(cross_set_self_loops(), Dictionary::monomials(2, 2), cfg);
  CHECK(cross.bottleneck == "lifted");
  CHECK(cross.c_gpe == 0.0);
  CHECK(cross.lift_iso <= 1e-12);
  CHECK(cross.state_iso == doctest::Approx(1.0 / cfg.tau_state));
}

TEST_CASE("full_report composite and identity invariants") {
  const SystemSpec vdp = make_system(SystemId::vdp);
  Rng rng(16);
  Dataset data;
  for (int s = 0; s < 6; ++s) {
    const VectorXd x0 = sample_initial_state(vdp, rng);
    MatrixXd inputs(10, 1);
    for (int i = 0; i < 10; ++i) inputs(i, 0) = rng.uniform(-2, 2);
    data.append(trajectory_to_dataset(simulate_segment(vdp, x0, inputs, 0.01)));
  }
  CertificateConfig cfg;
  const Dictionary dict = Dictionary::monomials(2, 3);
  const CertificateReport rep = full_report(data, dict, cfg);

  CHECK(rep.c_gpe <= rep.regression_iso);
  CHECK(rep.c_gpe <= rep.state_iso);
  CHECK(rep.c_gpe ==
        std::min({rep.c_dir, rep.c_fr, rep.c_rad, rep.state_iso, rep.lift_iso,
                  rep.regression_iso}));

  // Definitional identity between the SVD and eigenvalue routes.
  const double n = static_cast<double>(data.size());
  const double lhs = rep.sigma_min_bar_phi * rep.sigma_min_bar_phi;
  const double rhs = n * rep.c_reg;
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(lhs, 1e-12));

  // Row order only matters for the directional scan.
  Dataset perm;
  perm.X = data.X.colwise().reverse().eval();
  perm.U = data.U.colwise().reverse().eval();
  perm.X_next = data.X_next.colwise().reverse().eval();
  const CertificateReport rp = full_report(perm, dict, cfg);
  CHECK(rp.c_fr == doctest::Approx(rep.c_fr).epsilon(1e-12));
  CHECK(rp.c_rad == doctest::Approx(rep.c_rad).epsilon(1e-12));
  CHECK(rp.c_state == doctest::Approx(rep.c_state).epsilon(1e-9));
  CHECK(rp.c_lift == doctest::Approx(rep.c_lift).epsilon(1e-9));
  CHECK(rp.c_reg == doctest::Approx(rep.c_reg).epsilon(1e-9));
}

TEST_CASE("full_report rejects an empty dataset and reports the dead layer") {
  CertificateConfig cfg;
  CHECK_THROWS_AS(full_report(Dataset{}, Dictionary::monomials(2, 2), cfg),
                  std::invalid_argument);

  // All states identical: the state layer dies first.
  Dataset frozen;
  frozen.X = MatrixXd::Ones(6, 2);
  frozen.X_next = MatrixXd::Ones(6, 2);
  frozen.U = MatrixXd::Zero(6, 1);
  for (int i = 0; i < 6; ++i) frozen.U(i, 0) = 0.1 * i;
  try {
    full_report(frozen, Dictionary::monomials(2, 2), cfg);
    CHECK(false);
  } catch (const DegenerateDesignError& e) {
    CHECK(e.layer() == "state");
  }
}

TEST_CASE("rho_max calibration is deterministic and dimension-dependent") {
  CertificateConfig cfg;
  const CertificateConfig c2 = cfg.resolved_for_dimension(2);
  const CertificateConfig c2b = cfg.resolved_for_dimension(2);
  const CertificateConfig c3 = cfg.resolved_for_dimension(3);
  CHECK(c2.rho_max == c2b.rho_max);
  CHECK(c2.rho_max > 0.0);
  CHECK(c3.rho_max > 0.0);
  CHECK(c2.rho_max != c3.rho_max);
  CHECK(c2.s == 2);
  CHECK(c3.s == 3);
}
