#pragma once

#include "koopcert/edmdc.hpp"
#include "koopcert/systems.hpp"

#include <cstdint>
#include <optional>

namespace koopcert {

struct TaskConfig {
  int pred_horizon = 200;
  int ctrl_horizon = 100;
  int n_eval_rollouts = 5;
  double dt = 0.01;
  double lqr_state_weight = 1.0;
  double lqr_input_weight = 0.1;
  double failure_threshold = 1e6;
  double riccati_tol = 1e-10;
  int riccati_max_iter = 10000;
};

/// Tracking setpoints inside the sampling box; the Lorenz reference sits on
/// one attractor lobe.
VectorXd default_reference(const SystemSpec& spec);

struct TaskResult {
  double open_loop_rmse = 0.0;
  double tracking_rmse = 0.0;
  bool prediction_failed = false;
  bool control_failed = false;
};

struct Rollout {
  MatrixXd states;  // (steps_completed + 1) x n_x, row 0 is the readout of x0
  bool diverged = false;
};

/// Pure lifted rollout: lift x0 once, iterate the identified affine map,
/// read the coordinate monomials each step. Predicted states are never
/// re-lifted.
Rollout open_loop_predict(const EdmdcModel& model, const VectorXd& x0,
                          const MatrixXd& inputs, int horizon);

/// Infinite-horizon discrete LQR gain by Riccati iteration; nullopt on
/// non-convergence.
std::optional<MatrixXd> dlqr_gain(const MatrixXd& A, const MatrixXd& B,
                                  const MatrixXd& Q, const MatrixXd& R,
                                  double tol, int max_iter);

/// Fresh-initial-state open-loop prediction RMSE, averaged over
/// n_eval_rollouts held-out random input sequences. Failures are capped at
/// failure_threshold, never NaN.
TaskResult evaluate_prediction(const EdmdcModel& model, const SystemSpec& spec,
                               const TaskConfig& task, std::uint64_t seed);

/// Closed-loop setpoint tracking on the true simulator with the lifted
/// feedback law u = -K (psi(x) - psi(x_ref)), clipped to the input bound.
/// The reference and initial state default to the per-system setpoint and a
/// seeded draw from the initial box.
TaskResult tracking_control(const EdmdcModel& model, const SystemSpec& spec,
                            const TaskConfig& task, std::uint64_t seed,
                            std::optional<VectorXd> x_ref_override = {},
                            std::optional<VectorXd> x0_override = {});

/// Both task metrics with shared failure-capping rules.
TaskResult run_tasks(const EdmdcModel& model, const SystemSpec& spec,
                     const TaskConfig& task, std::uint64_t seed);

}  // namespace koopcert
