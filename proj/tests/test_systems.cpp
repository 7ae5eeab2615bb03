#include "koopcert/systems.hpp"

#include <doctest.h>

#include <cmath>

using namespace koopcert;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

VectorXd vec3(double a, double b, double c) {
  VectorXd v(3);
  v << a, b, c;
  return v;
}

VectorXd u0() { return VectorXd::Zero(1); }

// Dense explicit-Euler reference.
VectorXd euler_oracle(const SystemSpec& spec, VectorXd x, const VectorXd& u,
                      double dt, int macro_steps, int micro = 1000) {
  const double h = dt / micro;
  for (int s = 0; s < macro_steps; ++s) {
    for (int i = 0; i < micro; ++i) x += h * vector_field(spec, x, u);
  }
  return x;
}

}  // namespace

TEST_CASE("vector_field equilibria and hand-evaluated points") {
  const SystemSpec lorenz = make_system(SystemId::lorenz);
  CHECK(vector_field(lorenz, vec3(0, 0, 0), u0()).norm() == 0.0);

  const SystemSpec duffing = make_system(SystemId::duffing);
  CHECK(vector_field(duffing, vec2(0, 0), u0()).norm() == 0.0);
  // Hand substitution: delta=0.5, alpha=-1, beta=1. (1, 0) is the right well
  // equilibrium; (1.5, 0.5) gives (0.5, -0.25 + 1.5 - 3.375).
  CHECK(vector_field(duffing, vec2(1, 0), u0()).norm() == 0.0);
  const VectorXd f = vector_field(duffing, vec2(1.5, 0.5), u0());
  CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(-2.125).epsilon(1e-15));

  const SystemSpec vdp = make_system(SystemId::vdp);
  const VectorXd g = vector_field(vdp, vec2(2, 1), u0());
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(1.0 * (1.0 - 4.0) * 1.0 - 2.0));
}

TEST_CASE("vector_field dimension mismatch is a usage error") {
  const SystemSpec duffing = make_system(SystemId::duffing);
  CHECK_THROWS_AS(vector_field(duffing, vec3(0, 0, 0), u0()),
                  std::invalid_argument);
}

TEST_CASE("rk4_step preserves equilibria exactly") {
  for (SystemId id : {SystemId::duffing, SystemId::vdp, SystemId::lorenz}) {
    const SystemSpec spec = make_system(id);
    const VectorXd eq = VectorXd::Zero(spec.n_x);
    CHECK((rk4_step(spec, eq, u0(), 0.01) - eq).norm() == 0.0);
  }
  const SystemSpec duffing = make_system(SystemId::duffing);
  CHECK((rk4_step(duffing, vec2(1, 0), u0(), 0.01) - vec2(1, 0)).norm() ==
        0.0);
}

TEST_CASE("rk4 order on the scalar linear test system") {
  const double a = -1.3;
  const auto field = [a](const VectorXd& x) -> VectorXd { return a * x; };
  VectorXd x0(1);
  x0 << 1.7;

  double errs[3];
  const double dts[3] = {1e-2, 5e-3, 2.5e-3};
  for (int i = 0; i < 3; ++i) {
    const VectorXd stepped = rk4_kernel(field, x0, dts[i]);
    errs[i] = std::abs(stepped[0] - std::exp(a * dts[i]) * x0[0]);
  }
  // Fit the constant from the coarsest step, then check the fifth-order
  // scaling law on the finer ones.
  const double c = errs[0] / std::pow(dts[0], 5);
  for (int i = 1; i < 3; ++i) {
    CHECK(errs[i] <= 1.05 * c * std::pow(dts[i], 5));
  }
  // Halving dt cuts one-step error by at least 2^4 * 0.9.
  CHECK(errs[0] / errs[1] >= 16.0 * 0.9);
  CHECK(errs[1] / errs[2] >= 16.0 * 0.9);
}

TEST_CASE("rk4_step against a dense Euler oracle") {
  const SystemSpec duffing = make_system(SystemId::duffing);
  const VectorXd x0 = vec2(1, 0);
  const VectorXd stepped = rk4_step(duffing, x0, u0(), 0.01);
  CHECK(stepped.allFinite());
  CHECK((stepped - x0).norm() < 1.0);
  CHECK((stepped - euler_oracle(duffing, x0, u0(), 0.01, 1)).norm() <= 1e-6);

  const VectorXd x1 = vec2(1.3, 0.2);
  CHECK((rk4_step(duffing, x1, u0(), 0.01) -
         euler_oracle(duffing, x1, u0(), 0.01, 1))
            .norm() <= 1e-6);
}

TEST_CASE("simulate_segment basics") {
  const SystemSpec lorenz = make_system(SystemId::lorenz);
  const Trajectory empty =
      simulate_segment(lorenz, vec3(1, 2, 7), MatrixXd(0, 1), 0.01);
  CHECK(empty.states.rows() == 1);
  CHECK(empty.inputs.rows() == 0);

  const Trajectory still =
      simulate_segment(lorenz, vec3(0, 0, 0), MatrixXd::Zero(5, 1), 0.01);
  CHECK(still.states.norm() == 0.0);
  CHECK(still.states.rows() == 6);
}

TEST_CASE("simulate_segment matches the Euler oracle on vdp") {
  const SystemSpec vdp = make_system(SystemId::vdp);
  const VectorXd x0 = vec2(2, 0);
  const Trajectory tr =
      simulate_segment(vdp, x0, MatrixXd::Zero(12, 1), 0.01);
  const VectorXd last = tr.states.row(12).transpose();
  // Over 12 steps the comparison is limited by the oracle's own first-order
  // error, so it runs at dt/20000.
  CHECK((last - euler_oracle(vdp, x0, u0(), 0.01, 12, 20000)).norm() <= 1e-6);
}

TEST_CASE("simulate_segment is deterministic and checks input bounds") {
  const SystemSpec duffing = make_system(SystemId::duffing);
  MatrixXd inputs(4, 1);
  inputs << 0.5, -0.25, 1.0, 0.0;
  const Trajectory a = simulate_segment(duffing, vec2(0.3, -0.2), inputs, 0.01);
  const Trajectory b = simulate_segment(duffing, vec2(0.3, -0.2), inputs, 0.01);
  CHECK(a.states == b.states);

  MatrixXd bad(1, 1);
  bad << 5.0;  // above the 2.0 bound
  CHECK_THROWS_AS(simulate_segment(duffing, vec2(0, 0), bad, 0.01),
                  std::invalid_argument);
}

TEST_CASE("divergence raises SimulationDivergence with step index") {
  const SystemSpec duffing = make_system(SystemId::duffing);
  // Cubic term overflows from an absurd state.
  CHECK_THROWS_AS(rk4_step(duffing, vec2(1e200, 0), u0(), 0.01),
                  SimulationDivergence);
  try {
    simulate_segment(duffing, vec2(1e200, 0), MatrixXd::Zero(3, 1), 0.01);
    CHECK(false);
  } catch (const SimulationDivergence& e) {
    CHECK(e.step() == 0);
  }
}

TEST_CASE("trajectory_to_dataset aligns triples") {
  const SystemSpec vdp = make_system(SystemId::vdp);
  MatrixXd inputs(3, 1);
  inputs << 0.1, -0.1, 0.2;
  const Trajectory tr = simulate_segment(vdp, vec2(1, 1), inputs, 0.01);
  const Dataset d = trajectory_to_dataset(tr);
  CHECK(d.size() == 3);
  CHECK(d.X.row(0) == tr.states.row(0));
  CHECK(d.X_next.row(2) == tr.states.row(3));
  CHECK(d.U == inputs);
}
