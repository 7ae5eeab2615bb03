#include "koopcert/downstream.hpp"

#include "koopcert/rng.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace koopcert;

namespace {

// Linear 2D plant whose degree-1 lift makes EDMDc exact.
struct LinearPlant {
  MatrixXd A{2, 2};
  MatrixXd B{2, 1};
  LinearPlant() {
    A << 0.95, 0.08, -0.05, 0.9;
    B << 0.0, 0.1;
  }
  Dataset sample(int n, Rng& rng) const {
    Dataset d;
    d.X = rng.normal_mat(n, 2);
    d.U = rng.normal_mat(n, 1);
    d.X_next = d.X * A.transpose() + d.U * B.transpose();
    return d;
  }
};

EdmdcModel fit_linear(const LinearPlant& plant, Rng& rng) {
  const Dataset d = plant.sample(150, rng);
  return fit(build_design(d, Dictionary::monomials(2, 1)), 0.0);
}

}  // namespace

TEST_CASE("noiseless linear plant rolls out to machine precision") {
  Rng rng(51);
  LinearPlant plant;
  const EdmdcModel model = fit_linear(plant, rng);

  VectorXd x(2);
  x << 0.7, -0.3;
  MatrixXd inputs = 0.5 * rng.normal_mat(200, 1);
  const Rollout roll = open_loop_predict(model, x, inputs, 200);
  REQUIRE_FALSE(roll.diverged);

  VectorXd truth = x;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    truth = plant.A * truth + plant.B * inputs.row(t).transpose();
    worst = std::max(worst,
                     (roll.states.row(t + 1).transpose() - truth).norm());
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("horizon one equals the one-step prediction") {
  Rng rng(52);
  LinearPlant plant;
  const EdmdcModel model = fit_linear(plant, rng);
  VectorXd x(2);
  x << 0.4, 0.2;
  MatrixXd u(1, 1);
  u << 0.3;
  const Rollout roll = open_loop_predict(model, x, u, 1);

  MatrixXd phi(1, 3);
  phi << x(0), x(1), u(0, 0);
  const MatrixXd pred = model.predict_lifted(phi);
  CHECK((roll.states.row(1) - pred.row(0).leftCols(2)).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("rollout is prefix-consistent") {
  Rng rng(53);
  LinearPlant plant;
  const EdmdcModel model = fit_linear(plant, rng);
  VectorXd x(2);
  x << -0.2, 0.9;
  const MatrixXd inputs = rng.normal_mat(50, 1);
  const Rollout full = open_loop_predict(model, x, inputs, 50);
  const Rollout part = open_loop_predict(model, x, inputs, 20);
  CHECK(full.states.topRows(21) == part.states);
  CHECK_THROWS_AS(open_loop_predict(model, x, inputs, 51),
                  std::invalid_argument);
}

TEST_CASE("unstable learned operator is capped, never NaN") {
  Rng rng(54);
  LinearPlant plant;
  EdmdcModel model = fit_linear(plant, rng);
  model.Kbar *= 5.0;  // push the spectral radius well above one

  const SystemSpec spec = make_system(SystemId::duffing);
  TaskConfig task;
  const TaskResult res = evaluate_prediction(model, spec, task, 9);
  CHECK(res.prediction_failed);
  CHECK(res.open_loop_rmse == task.failure_threshold);
  CHECK(std::isfinite(res.open_loop_rmse));
}

TEST_CASE("dlqr stabilizes a controllable pair") {
  MatrixXd A(2, 2), B(2, 1);
  A << 1.01, 0.1, 0.0, 0.99;
  B << 0.0, 0.1;
  const auto K = dlqr_gain(A, B, MatrixXd::Identity(2, 2),
                           0.1 * MatrixXd::Identity(1, 1), 1e-10, 10000);
  REQUIRE(K.has_value());
  const MatrixXd closed = A - B * (*K);
  const Eigen::EigenSolver<MatrixXd> es(closed);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);

  // Closed loop beats open-loop drift from the same start.
  VectorXd x_cl(2), x_ol(2);
  x_cl << 1.0, 0.5;
  x_ol = x_cl;
  double cl = 0.0, ol = 0.0;
  for (int t = 0; t < 100; ++t) {
    x_cl = closed * x_cl;
    x_ol = A * x_ol;
    cl += x_cl.squaredNorm();
    ol += x_ol.squaredNorm();
  }
  CHECK(cl < ol);
}

TEST_CASE("riccati non-convergence is reported as control failure") {
  // Unstabilizable pair: unstable mode with no input authority.
  Rng rng(55);
  LinearPlant plant;
  EdmdcModel model = fit_linear(plant, rng);
  // Overwrite the learned map with an unstable, uncontrollable one.
  Dataset d;
  d.X = rng.normal_mat(100, 2);
  d.U = MatrixXd::Zero(100, 1);
  for (int i = 0; i < 100; ++i) d.U(i, 0) = 1e-7 * ((i % 2) ? 1 : -1);
  MatrixXd au(2, 2);
  au << 1.3, 0.0, 0.0, 1.2;
  d.X_next = d.X * au.transpose();
  model = fit(build_design(d, Dictionary::monomials(2, 1)), 0.0);

  const SystemSpec spec = make_system(SystemId::duffing);
  TaskConfig task;
  const TaskResult res = tracking_control(model, spec, task, 3);
  CHECK(res.control_failed);
  CHECK(res.tracking_rmse == task.failure_threshold);
}

TEST_CASE("tracking an equilibrium from the equilibrium is exact") {
  Rng rng(56);
  const SystemSpec duffing = make_system(SystemId::duffing);
  // Fit on real duffing data so the model is sensible.
  Dataset data;
  for (int s = 0; s < 8; ++s) {
    const VectorXd x0 = sample_initial_state(duffing, rng);
    MatrixXd inputs(12, 1);
    for (int i = 0; i < 12; ++i) inputs(i, 0) = rng.uniform(-2, 2);
    data.append(
        trajectory_to_dataset(simulate_segment(duffing, x0, inputs, 0.01)));
  }
  const EdmdcModel model =
      fit(build_design(data, Dictionary::monomials(2, 3)), 0.0);

  VectorXd eq(2);
  eq << 1.0, 0.0;  // right-well equilibrium of the double well
  TaskConfig task;
  const TaskResult res = tracking_control(model, duffing, task, 1, eq, eq);
  CHECK_FALSE(res.control_failed);
  CHECK(res.tracking_rmse <= 1e-8);
}

TEST_CASE("tracking is deterministic given model and seed") {
  Rng rng(57);
  LinearPlant plant;
  const EdmdcModel model = fit_linear(plant, rng);
  const SystemSpec spec = make_system(SystemId::vdp);
  TaskConfig task;
  const TaskResult a = tracking_control(model, spec, task, 17);
  const TaskResult b = tracking_control(model, spec, task, 17);
  CHECK(a.tracking_rmse == b.tracking_rmse);
  CHECK(std::isfinite(a.tracking_rmse));
}

TEST_CASE("run_tasks never emits NaN") {
  Rng rng(58);
  LinearPlant plant;
  EdmdcModel model = fit_linear(plant, rng);
  model.Kbar *= 50.0;  // deliberately broken model
  const SystemSpec duffing = make_system(SystemId::duffing);
  TaskConfig task;
  const TaskResult res = run_tasks(model, duffing, task, 5);
  CHECK(std::isfinite(res.open_loop_rmse));
  CHECK(std::isfinite(res.tracking_rmse));
}
