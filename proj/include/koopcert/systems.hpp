#pragma once

#include "koopcert/types.hpp"

#include <functional>
#include <map>
#include <string>

namespace koopcert {

enum class SystemId { duffing, vdp, lorenz };

std::string to_string(SystemId id);
SystemId system_id_from_string(const std::string& name);

/// One controlled benchmark ODE. Parameters are named so a config file can
/// override them without recompiling.
struct SystemSpec {
  SystemId id = SystemId::duffing;
  int n_x = 2;
  int n_u = 1;
  std::map<std::string, double> params;
  double input_bound = 2.0;
  MatrixXd init_box;  // n_x x 2, columns are (lo, hi)

  void validate() const;
};

/// Canonical parameterizations: double-well Duffing (delta=0.5, alpha=-1,
/// beta=1), Van der Pol (mu=1), Lorenz (sigma=10, rho=28, beta=8/3) with the
/// input entering the second equation.
SystemSpec make_system(SystemId id);

struct Trajectory {
  MatrixXd states;  // (L+1) x n_x
  MatrixXd inputs;  // L x n_u
  double dt = 0.0;

  Eigen::Index num_steps() const { return inputs.rows(); }
};

VectorXd vector_field(const SystemSpec& spec, const VectorXd& x,
                      const VectorXd& u);

/// Classical RK4 update for an arbitrary autonomous field.
VectorXd rk4_kernel(const std::function<VectorXd(const VectorXd&)>& f,
                    const VectorXd& x, double dt);

/// Classical RK4 update with zero-order hold on u. Throws
/// SimulationDivergence if the result is nonfinite.
VectorXd rk4_step(const SystemSpec& spec, const VectorXd& x, const VectorXd& u,
                  double dt);

Trajectory simulate_segment(const SystemSpec& spec, const VectorXd& x0,
                            const MatrixXd& inputs, double dt);

/// Transition triples (x_k, u_k, x_{k+1}) of a trajectory.
Dataset trajectory_to_dataset(const Trajectory& tr);

/// Uniform draw from the system's initial-condition box.
VectorXd sample_initial_state(const SystemSpec& spec, class Rng& rng);

}  // namespace koopcert
