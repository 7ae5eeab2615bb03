#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace koopcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Stacked (x_k, u_k, x_{k+1}) transition triples. Rows are aligned across
/// the three matrices and kept in the order segments were collected; that
/// order is the canonical sample order for order-sensitive diagnostics.
struct Dataset {
  MatrixXd X;       // N x n_x
  MatrixXd U;       // N x n_u
  MatrixXd X_next;  // N x n_x

  Dataset() = default;
  Dataset(MatrixXd x, MatrixXd u, MatrixXd x_next)
      : X(std::move(x)), U(std::move(u)), X_next(std::move(x_next)) {
    if (X.rows() != U.rows() || X.rows() != X_next.rows() ||
        X.cols() != X_next.cols()) {
      throw std::invalid_argument("Dataset: inconsistent triple shapes");
    }
  }

  Eigen::Index size() const { return X.rows(); }
  bool empty() const { return X.rows() == 0; }
  int state_dim() const { return static_cast<int>(X.cols()); }
  int input_dim() const { return static_cast<int>(U.cols()); }

  void append(const Dataset& other) {
    if (empty()) {
      *this = other;
      return;
    }
    if (other.empty()) return;
    if (other.X.cols() != X.cols() || other.U.cols() != U.cols()) {
      throw std::invalid_argument("Dataset::append: dimension mismatch");
    }
    const Eigen::Index n = size(), m = other.size();
    X.conservativeResize(n + m, Eigen::NoChange);
    U.conservativeResize(n + m, Eigen::NoChange);
    X_next.conservativeResize(n + m, Eigen::NoChange);
    X.bottomRows(m) = other.X;
    U.bottomRows(m) = other.U;
    X_next.bottomRows(m) = other.X_next;
  }
};

/// The integrator produced a nonfinite state.
class SimulationDivergence : public std::runtime_error {
 public:
  SimulationDivergence(std::string what, VectorXd state, int step)
      : std::runtime_error(std::move(what)),
        state_(std::move(state)),
        step_(step) {}
  const VectorXd& state() const { return state_; }
  int step() const { return step_; }

 private:
  VectorXd state_;
  int step_;
};

/// A design matrix lost all active columns (or an equivalent fatal
/// degeneracy). Carries the certificate layer where it happened so callers
/// can report the bottleneck instead of silently regularizing.
class DegenerateDesignError : public std::runtime_error {
 public:
  DegenerateDesignError(std::string what, std::string layer = "")
      : std::runtime_error(std::move(what)), layer_(std::move(layer)) {}
  const std::string& layer() const { return layer_; }
  void set_layer(std::string layer) { layer_ = std::move(layer); }

 private:
  std::string layer_;
};

inline MatrixXd vstack(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  MatrixXd out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

}  // namespace koopcert
