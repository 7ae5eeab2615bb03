#include "koopcert/systems.hpp"

#include "koopcert/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace koopcert {

std::string to_string(SystemId id) {
  switch (id) {
    case SystemId::duffing: return "duffing";
    case SystemId::vdp: return "vdp";
    case SystemId::lorenz: return "lorenz";
  }
  return "?";
}

SystemId system_id_from_string(const std::string& name) {
  if (name == "duffing") return SystemId::duffing;
  if (name == "vdp") return SystemId::vdp;
  if (name == "lorenz") return SystemId::lorenz;
  throw std::invalid_argument("unknown system: " + name);
}

void SystemSpec::validate() const {
  const int expected_nx = (id == SystemId::lorenz) ? 3 : 2;
  if (n_x != expected_nx || n_u != 1) {
    throw std::invalid_argument("SystemSpec: dimensions do not match system " +
                                to_string(id));
  }
  if (!(input_bound > 0.0)) {
    throw std::invalid_argument("SystemSpec: input_bound must be positive");
  }
  for (const auto& [k, v] : params) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("SystemSpec: nonfinite parameter " + k);
    }
  }
  if (init_box.rows() != n_x || init_box.cols() != 2) {
    throw std::invalid_argument("SystemSpec: init_box must be n_x x 2");
  }
}

SystemSpec make_system(SystemId id) {
  SystemSpec s;
  s.id = id;
  s.n_u = 1;
  switch (id) {
    case SystemId::duffing:
      s.n_x = 2;
      s.params = {{"delta", 0.5}, {"alpha", -1.0}, {"beta", 1.0}};
      s.input_bound = 2.0;
      s.init_box = MatrixXd(2, 2);
      s.init_box << -2.0, 2.0, -2.0, 2.0;
      break;
    case SystemId::vdp:
      s.n_x = 2;
      s.params = {{"mu", 1.0}};
      s.input_bound = 2.0;
      s.init_box = MatrixXd(2, 2);
      s.init_box << -2.0, 2.0, -2.0, 2.0;
      break;
    case SystemId::lorenz:
      s.n_x = 3;
      s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
      s.input_bound = 20.0;
      s.init_box = MatrixXd(3, 2);
      s.init_box << -20.0, 20.0, -25.0, 25.0, 5.0, 45.0;
      break;
  }
  return s;
}

VectorXd vector_field(const SystemSpec& spec, const VectorXd& x,
                      const VectorXd& u) {
  if (x.size() != spec.n_x || u.size() != spec.n_u) {
    throw std::invalid_argument("vector_field: dimension mismatch");
  }
  VectorXd dx(spec.n_x);
  switch (spec.id) {
    case SystemId::duffing: {
      const double delta = spec.params.at("delta");
      const double alpha = spec.params.at("alpha");
      const double beta = spec.params.at("beta");
      dx[0] = x[1];
      dx[1] = -delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0] + u[0];
      break;
    }
    case SystemId::vdp: {
      const double mu = spec.params.at("mu");
      dx[0] = x[1];
      dx[1] = mu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
      break;
    }
    case SystemId::lorenz: {
      const double sigma = spec.params.at("sigma");
      const double rho = spec.params.at("rho");
      const double beta = spec.params.at("beta");
      dx[0] = sigma * (x[1] - x[0]);
      dx[1] = x[0] * (rho - x[2]) - x[1] + u[0];
      dx[2] = x[0] * x[1] - beta * x[2];
      break;
    }
  }
  return dx;
}

VectorXd rk4_kernel(const std::function<VectorXd(const VectorXd&)>& f,
                    const VectorXd& x, double dt) {
  const VectorXd k1 = f(x);
  const VectorXd k2 = f(x + 0.5 * dt * k1);
  const VectorXd k3 = f(x + 0.5 * dt * k2);
  const VectorXd k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

VectorXd rk4_step(const SystemSpec& spec, const VectorXd& x, const VectorXd& u,
                  double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  VectorXd out = rk4_kernel(
      [&](const VectorXd& xi) { return vector_field(spec, xi, u); }, x, dt);
  if (!out.allFinite()) {
    throw SimulationDivergence("rk4_step: nonfinite state", out, 0);
  }
  return out;
}

Trajectory simulate_segment(const SystemSpec& spec, const VectorXd& x0,
                            const MatrixXd& inputs, double dt) {
  if (x0.size() != spec.n_x) {
    throw std::invalid_argument("simulate_segment: x0 dimension mismatch");
  }
  if (inputs.rows() > 0 && inputs.cols() != spec.n_u) {
    throw std::invalid_argument("simulate_segment: input dimension mismatch");
  }
  for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
    if (inputs.row(k).cwiseAbs().maxCoeff() > spec.input_bound * (1.0 + 1e-12)) {
      throw std::invalid_argument("simulate_segment: input exceeds bound");
    }
  }
  const Eigen::Index steps = inputs.rows();
  Trajectory tr;
  tr.dt = dt;
  tr.inputs = inputs;
  tr.states.resize(steps + 1, spec.n_x);
  tr.states.row(0) = x0.transpose();
  for (Eigen::Index k = 0; k < steps; ++k) {
    try {
      const VectorXd next =
          rk4_step(spec, tr.states.row(k).transpose(), inputs.row(k).transpose(), dt);
      tr.states.row(k + 1) = next.transpose();
    } catch (const SimulationDivergence& e) {
      throw SimulationDivergence(
          "simulate_segment: divergence at step " + std::to_string(k),
          e.state(), static_cast<int>(k));
    }
  }
  return tr;
}

Dataset trajectory_to_dataset(const Trajectory& tr) {
  const Eigen::Index n = tr.num_steps();
  Dataset d;
  d.X = tr.states.topRows(n);
  d.U = tr.inputs;
  d.X_next = tr.states.bottomRows(n);
  return d;
}

VectorXd sample_initial_state(const SystemSpec& spec, Rng& rng) {
  VectorXd x(spec.n_x);
  for (int i = 0; i < spec.n_x; ++i) {
    x[i] = rng.uniform(spec.init_box(i, 0), spec.init_box(i, 1));
  }
  return x;
}

}  // namespace koopcert
