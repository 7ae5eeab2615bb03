#include "koopcert/lifting.hpp"

#include <stdexcept>

namespace koopcert {

namespace {

// Multi-indices of total degree d over n variables, lexicographic with the
// first variable's exponent decreasing: (d,0,..), (d-1,1,..), ..., (0,..,d).
void enumerate_degree(int n, int d, std::vector<int>& prefix,
                      std::vector<std::vector<int>>& out) {
  if (static_cast<int>(prefix.size()) == n - 1) {
    prefix.push_back(d);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = d; e >= 0; --e) {
    prefix.push_back(e);
    enumerate_degree(n, d - e, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

Dictionary Dictionary::monomials(int n_x, int degree) {
  if (n_x < 1 || degree < 1) {
    throw std::invalid_argument("Dictionary: n_x and degree must be >= 1");
  }
  Dictionary dict;
  dict.n_x = n_x;
  dict.degree = degree;
  for (int d = 1; d <= degree; ++d) {
    std::vector<int> prefix;
    enumerate_degree(n_x, d, prefix, dict.terms);
  }
  dict.d_psi = static_cast<int>(dict.terms.size());
  return dict;
}

VectorXd lift(const Dictionary& dict, const VectorXd& x) {
  if (x.size() != dict.n_x) {
    throw std::invalid_argument("lift: state dimension mismatch");
  }
  VectorXd z(dict.d_psi);
  for (int j = 0; j < dict.d_psi; ++j) {
    double v = 1.0;
    const auto& exps = dict.terms[j];
    for (int i = 0; i < dict.n_x; ++i) {
      for (int e = 0; e < exps[i]; ++e) v *= x[i];
    }
    z[j] = v;
  }
  return z;
}

MatrixXd lift_rows(const Dictionary& dict, const MatrixXd& X) {
  MatrixXd Z(X.rows(), dict.d_psi);
  for (Eigen::Index k = 0; k < X.rows(); ++k) {
    Z.row(k) = lift(dict, X.row(k).transpose()).transpose();
  }
  return Z;
}

LiftedDesign build_design(const Dataset& dataset, const Dictionary& dict) {
  if (dataset.empty()) {
    throw std::invalid_argument("build_design: empty dataset");
  }
  if (dataset.state_dim() != dict.n_x) {
    throw std::invalid_argument("build_design: dictionary/state mismatch");
  }
  LiftedDesign d;
  d.dict = dict;
  d.Psi = lift_rows(dict, dataset.X);
  d.U = dataset.U;
  d.Y = lift_rows(dict, dataset.X_next);
  d.Phi.resize(dataset.size(), dict.d_psi + dataset.input_dim());
  d.Phi.leftCols(dict.d_psi) = d.Psi;
  d.Phi.rightCols(dataset.input_dim()) = d.U;
  return d;
}

}  // namespace koopcert
