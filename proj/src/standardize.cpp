#include "koopcert/standardize.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace koopcert {

int active_rank(const MatrixXd& Zbar, double rank_tol) {
  if (Zbar.rows() == 0 || Zbar.cols() == 0) return 0;
  Eigen::BDCSVD<MatrixXd> svd(Zbar);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = rank_tol * sv[0];
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++r;
  }
  return r;
}

StandardizedDesign standardize(const MatrixXd& M, double var_threshold,
                               double rank_tol) {
  const Eigen::Index n = M.rows();
  const Eigen::Index p = M.cols();
  if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");
  if (!M.allFinite()) {
    throw std::invalid_argument("standardize: nonfinite entries");
  }

  StandardizedDesign out;
  out.var_threshold = var_threshold;
  out.mu = M.colwise().mean();
  out.scale.resize(p);
  out.active_mask.assign(p, false);

  for (Eigen::Index j = 0; j < p; ++j) {
    const double var =
        (M.col(j).array() - out.mu[j]).square().sum() / static_cast<double>(n);
    out.scale[j] = std::sqrt(var);
    if (var >= var_threshold) {
      out.active_mask[j] = true;
      out.active_cols.push_back(static_cast<int>(j));
    }
  }
  out.active_dim = static_cast<int>(out.active_cols.size());
  if (out.active_dim == 0) {
    throw DegenerateDesignError("standardize: all columns inactive");
  }

  out.Zbar.resize(n, out.active_dim);
  for (int a = 0; a < out.active_dim; ++a) {
    const int j = out.active_cols[a];
    out.Zbar.col(a) =
        ((M.col(j).array() - out.mu[j]) / out.scale[j]).matrix();
  }
  out.active_rank = active_rank(out.Zbar, rank_tol);
  return out;
}

}  // namespace koopcert
