#include "koopcert/downstream.hpp"

#include "koopcert/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace koopcert {

VectorXd default_reference(const SystemSpec& spec) {
  VectorXd r(spec.n_x);
  if (spec.id == SystemId::lorenz) {
    const double beta = spec.params.at("beta");
    const double rho = spec.params.at("rho");
    const double c = std::sqrt(beta * (rho - 1.0));
    r << c, c, rho - 1.0;
  } else {
    r << 0.5, 0.0;
  }
  return r;
}

Rollout open_loop_predict(const EdmdcModel& model, const VectorXd& x0,
                          const MatrixXd& inputs, int horizon) {
  if (horizon > inputs.rows()) {
    throw std::invalid_argument("open_loop_predict: horizon exceeds inputs");
  }
  const LiftedLinearModel lm = model.affine_dynamics();
  const int n_x = model.dict.n_x;

  Rollout out;
  out.states.resize(horizon + 1, n_x);
  VectorXd z = lift(model.dict, x0);
  out.states.row(0) = z.head(n_x).transpose();
  for (int t = 0; t < horizon; ++t) {
    z = lm.c + lm.A * z + lm.B * inputs.row(t).transpose();
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e150) {
      out.diverged = true;
      out.states.conservativeResize(t + 1, Eigen::NoChange);
      return out;
    }
    out.states.row(t + 1) = z.head(n_x).transpose();
  }
  return out;
}

std::optional<MatrixXd> dlqr_gain(const MatrixXd& A, const MatrixXd& B,
                                  const MatrixXd& Q, const MatrixXd& R,
                                  double tol, int max_iter) {
  MatrixXd P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd BtP = B.transpose() * P;
    const MatrixXd gain_lhs = R + BtP * B;
    const MatrixXd K = gain_lhs.ldlt().solve(BtP * A);
    const MatrixXd P_next =
        Q + A.transpose() * P * A - A.transpose() * P * B * K;
    if (!P_next.allFinite() || P_next.norm() > 1e12) return std::nullopt;
    const double delta = (P_next - P).cwiseAbs().maxCoeff();
    P = P_next;
    if (delta < tol) {
      const MatrixXd BtPf = B.transpose() * P;
      return MatrixXd((R + BtPf * B).ldlt().solve(BtPf * A));
    }
  }
  return std::nullopt;
}

TaskResult evaluate_prediction(const EdmdcModel& model, const SystemSpec& spec,
                               const TaskConfig& task, std::uint64_t seed) {
  TaskResult res;
  double acc = 0.0;
  for (int r = 0; r < task.n_eval_rollouts; ++r) {
    Rng rng(derive_seed(seed, {0x9ED, static_cast<std::uint64_t>(r)}));
    const VectorXd x0 = sample_initial_state(spec, rng);
    MatrixXd inputs(task.pred_horizon, spec.n_u);
    for (int t = 0; t < task.pred_horizon; ++t) {
      for (int j = 0; j < spec.n_u; ++j) {
        inputs(t, j) = rng.uniform(-spec.input_bound, spec.input_bound);
      }
    }

    double rollout_rmse = task.failure_threshold;
    bool failed = true;
    try {
      const Trajectory truth = simulate_segment(spec, x0, inputs, task.dt);
      const Rollout pred = open_loop_predict(model, x0, inputs,
                                             task.pred_horizon);
      if (!pred.diverged) {
        const MatrixXd err =
            pred.states.bottomRows(task.pred_horizon) -
            truth.states.bottomRows(task.pred_horizon);
        const double raw = std::sqrt(
            err.squaredNorm() /
            static_cast<double>(task.pred_horizon * spec.n_x));
        if (std::isfinite(raw) && raw <= task.failure_threshold) {
          rollout_rmse = raw;
          failed = false;
        }
      }
    } catch (const SimulationDivergence&) {
      // true-system divergence counts as a failed rollout
    }
    if (failed) res.prediction_failed = true;
    acc += rollout_rmse;
  }
  res.open_loop_rmse = acc / task.n_eval_rollouts;
  return res;
}

TaskResult tracking_control(const EdmdcModel& model, const SystemSpec& spec,
                            const TaskConfig& task, std::uint64_t seed,
                            std::optional<VectorXd> x_ref_override,
                            std::optional<VectorXd> x0_override) {
  TaskResult res;
  const int d_psi = model.dict.d_psi;
  const LiftedLinearModel lm = model.affine_dynamics();

  MatrixXd Q = MatrixXd::Zero(d_psi, d_psi);
  for (int i = 0; i < spec.n_x; ++i) Q(i, i) = task.lqr_state_weight;
  const MatrixXd R =
      task.lqr_input_weight * MatrixXd::Identity(spec.n_u, spec.n_u);

  const auto gain =
      dlqr_gain(lm.A, lm.B, Q, R, task.riccati_tol, task.riccati_max_iter);
  if (!gain) {
    res.control_failed = true;
    res.tracking_rmse = task.failure_threshold;
    return res;
  }

  Rng rng(derive_seed(seed, {0xC7A1}));
  const VectorXd x_ref = x_ref_override.value_or(default_reference(spec));
  VectorXd x = x0_override.value_or(sample_initial_state(spec, rng));
  const VectorXd z_ref = lift(model.dict, x_ref);

  double acc = 0.0;
  bool failed = false;
  for (int t = 0; t < task.ctrl_horizon; ++t) {
    VectorXd u = -(*gain) * (lift(model.dict, x) - z_ref);
    u = u.cwiseMax(-spec.input_bound).cwiseMin(spec.input_bound);
    try {
      x = rk4_step(spec, x, u, task.dt);
    } catch (const SimulationDivergence&) {
      failed = true;
      break;
    }
    acc += (x - x_ref).squaredNorm();
  }
  if (failed) {
    res.control_failed = true;
    res.tracking_rmse = task.failure_threshold;
    return res;
  }
  const double raw = std::sqrt(acc / static_cast<double>(task.ctrl_horizon));
  if (!std::isfinite(raw) || raw > task.failure_threshold) {
    res.control_failed = true;
    res.tracking_rmse = task.failure_threshold;
  } else {
    res.tracking_rmse = raw;
  }
  return res;
}

TaskResult run_tasks(const EdmdcModel& model, const SystemSpec& spec,
                     const TaskConfig& task, std::uint64_t seed) {
  const TaskResult pred = evaluate_prediction(model, spec, task, seed);
  const TaskResult ctrl = tracking_control(model, spec, task, seed);
  TaskResult out;
  out.open_loop_rmse = pred.open_loop_rmse;
  out.prediction_failed = pred.prediction_failed;
  out.tracking_rmse = ctrl.tracking_rmse;
  out.control_failed = ctrl.control_failed;
  return out;
}

}  // namespace koopcert
