#include "koopcert/acquisition.hpp"

#include "koopcert/rng.hpp"
#include "koopcert/sobol.hpp"
#include "koopcert/standardize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace koopcert {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(MethodId id) {
  switch (id) {
    case MethodId::RANDOM: return "RANDOM";
    case MethodId::SOBOL: return "SOBOL";
    case MethodId::STATE_KCENTER: return "STATE-KCENTER";
    case MethodId::LIFT_DOPT: return "LIFT-DOPT";
    case MethodId::REG_DOPT: return "REG-DOPT";
    case MethodId::REG_EOPT: return "REG-EOPT";
    case MethodId::A_PE: return "A-PE";
    case MethodId::OID: return "OID";
    case MethodId::GPE_STATE: return "GPE-STATE";
    case MethodId::IGPE_DOPT: return "IGPE-DOPT";
    case MethodId::IGPE_NO_DOPT: return "IGPE-NO-DOPT";
    case MethodId::IGPE_NO_DIR: return "IGPE-NO-DIR";
    case MethodId::IGPE_NO_CLUSTER: return "IGPE-NO-CLUSTER";
    case MethodId::IGPE_WHALF: return "IGPE-WHALF";
    case MethodId::IGPE_UNIFORM: return "IGPE-UNIFORM";
    case MethodId::IGPE_REG_HEAVY: return "IGPE-REG-HEAVY";
    case MethodId::IGPE_CLUSTER_HEAVY: return "IGPE-CLUSTER-HEAVY";
  }
  return "?";
}

const std::vector<std::string>& all_method_names() {
  static const std::vector<std::string> names = {
      "RANDOM",        "SOBOL",          "STATE-KCENTER",
      "LIFT-DOPT",     "REG-DOPT",       "REG-EOPT",
      "A-PE",          "OID",            "GPE-STATE",
      "IGPE-DOPT",     "IGPE-NO-DOPT",   "IGPE-NO-DIR",
      "IGPE-NO-CLUSTER", "IGPE-WHALF",   "IGPE-UNIFORM",
      "IGPE-REG-HEAVY", "IGPE-CLUSTER-HEAVY"};
  return names;
}

MethodId method_id_from_string(const std::string& name) {
  static const std::map<std::string, MethodId> ids = {
      {"RANDOM", MethodId::RANDOM},
      {"SOBOL", MethodId::SOBOL},
      {"STATE-KCENTER", MethodId::STATE_KCENTER},
      {"LIFT-DOPT", MethodId::LIFT_DOPT},
      {"REG-DOPT", MethodId::REG_DOPT},
      {"REG-EOPT", MethodId::REG_EOPT},
      {"A-PE", MethodId::A_PE},
      {"OID", MethodId::OID},
      {"GPE-STATE", MethodId::GPE_STATE},
      {"IGPE-DOPT", MethodId::IGPE_DOPT},
      {"IGPE-NO-DOPT", MethodId::IGPE_NO_DOPT},
      {"IGPE-NO-DIR", MethodId::IGPE_NO_DIR},
      {"IGPE-NO-CLUSTER", MethodId::IGPE_NO_CLUSTER},
      {"IGPE-WHALF", MethodId::IGPE_WHALF},
      {"IGPE-UNIFORM", MethodId::IGPE_UNIFORM},
      {"IGPE-REG-HEAVY", MethodId::IGPE_REG_HEAVY},
      {"IGPE-CLUSTER-HEAVY", MethodId::IGPE_CLUSTER_HEAVY}};
  auto it = ids.find(name);
  if (it == ids.end()) throw std::invalid_argument("unknown method: " + name);
  return it->second;
}

bool is_igpe_family(MethodId id) {
  switch (id) {
    case MethodId::GPE_STATE:
    case MethodId::IGPE_DOPT:
    case MethodId::IGPE_NO_DOPT:
    case MethodId::IGPE_NO_DIR:
    case MethodId::IGPE_NO_CLUSTER:
    case MethodId::IGPE_WHALF:
    case MethodId::IGPE_UNIFORM:
    case MethodId::IGPE_REG_HEAVY:
    case MethodId::IGPE_CLUSTER_HEAVY:
      return true;
    default:
      return false;
  }
}

IgpeWeights weights_for(MethodId id) {
  IgpeWeights w;
  switch (id) {
    case MethodId::IGPE_NO_DOPT:
      w.lift_logdet = 0.0;
      break;
    case MethodId::IGPE_NO_DIR:
      w.novelty = 0.0;
      break;
    case MethodId::IGPE_NO_CLUSTER:
      w.cluster = 0.0;
      break;
    case MethodId::IGPE_WHALF:
      w.state_min *= 0.5;
      w.lift_logdet *= 0.5;
      w.lift_eff_rank *= 0.5;
      w.reg_min *= 0.5;
      w.novelty *= 0.5;
      w.u_var *= 0.5;
      w.cluster *= 0.5;
      break;
    case MethodId::IGPE_UNIFORM:
      w = {1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7};
      break;
    case MethodId::IGPE_REG_HEAVY:
      w.reg_min *= 3.0;
      break;
    case MethodId::IGPE_CLUSTER_HEAVY:
      w.cluster *= 3.0;
      break;
    case MethodId::GPE_STATE:
      w.lift_logdet = 0.0;
      w.lift_eff_rank = 0.0;
      w.reg_min = 0.0;
      w.u_var = 0.0;
      break;
    default:
      break;
  }
  return w;
}

MethodSpec make_method(MethodId id, std::uint64_t seed) {
  return MethodSpec{id, weights_for(id), seed};
}

std::vector<SegmentCandidate> generate_library(const SystemSpec& spec,
                                               std::uint64_t seed,
                                               int library_size, int l_seg,
                                               double dt) {
  (void)dt;
  Rng rng(derive_seed(seed, {0x11B}));
  std::vector<SegmentCandidate> lib;
  lib.reserve(static_cast<std::size_t>(library_size));
  for (int i = 0; i < library_size; ++i) {
    SegmentCandidate c;
    c.x0 = sample_initial_state(spec, rng);
    c.u_const = VectorXd(spec.n_u);
    for (int j = 0; j < spec.n_u; ++j) {
      c.u_const[j] = rng.uniform(-spec.input_bound, spec.input_bound);
    }
    c.length = l_seg;
    lib.push_back(std::move(c));
  }
  return lib;
}

namespace {

struct SimulatedCandidate {
  SegmentCandidate cand;
  bool diverged = false;
  Dataset triples;
  MatrixXd Psi;        // l_seg x d_psi
  MatrixXd Phi;        // l_seg x p
  VectorXd mean_state; // mean over the full trajectory
  MatrixXd disps;      // raw displacement vectors, one per transition
};

SimulatedCandidate simulate_candidate(const SegmentCandidate& c,
                                      const SystemSpec& spec,
                                      const Dictionary& dict, double dt) {
  SimulatedCandidate sc;
  sc.cand = c;
  const MatrixXd inputs = c.u_const.transpose().replicate(c.length, 1);
  try {
    const Trajectory tr = simulate_segment(spec, c.x0, inputs, dt);
    sc.triples = trajectory_to_dataset(tr);
    sc.Psi = lift_rows(dict, sc.triples.X);
    sc.Phi.resize(sc.triples.size(), dict.d_psi + spec.n_u);
    sc.Phi.leftCols(dict.d_psi) = sc.Psi;
    sc.Phi.rightCols(spec.n_u) = sc.triples.U;
    sc.mean_state = tr.states.colwise().mean();
    sc.disps = sc.triples.X_next - sc.triples.X;
  } catch (const SimulationDivergence&) {
    sc.diverged = true;
  }
  return sc;
}

std::vector<SimulatedCandidate> simulate_library(
    const std::vector<SegmentCandidate>& lib, const SystemSpec& spec,
    const Dictionary& dict, double dt) {
  std::vector<SimulatedCandidate> out;
  out.reserve(lib.size());
  for (const auto& c : lib) {
    out.push_back(simulate_candidate(c, spec, dict, dt));
  }
  return out;
}

// Spectral summaries of one certificate layer, safe on degenerate input:
// an all-inactive design contributes zero-value features rather than an
// error (scoring must stay total).
struct LayerFeatures {
  double lambda_min = 0.0;
  double eff_rank = 0.0;
  double logdet_eps = 0.0;  // logdet(eps I + Gram), padded to full width
};

LayerFeatures layer_features(const MatrixXd& M, double var_threshold,
                             double eps) {
  LayerFeatures f;
  const int p_full = static_cast<int>(M.cols());
  f.logdet_eps = p_full * std::log(eps);
  if (M.rows() < 2) return f;
  StandardizedDesign z;
  try {
    z = standardize(M, var_threshold);
  } catch (const DegenerateDesignError&) {
    return f;
  }
  const MatrixXd gram =
      z.Zbar.transpose() * z.Zbar / static_cast<double>(z.Zbar.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  VectorXd evals = es.eigenvalues().cwiseMax(0.0);
  f.lambda_min = es.eigenvalues().minCoeff();

  const double total = evals.sum();
  if (total > 0.0) {
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
      const double q = evals[i] / total;
      if (q > 0.0) entropy -= q * std::log(q);
    }
    f.eff_rank = std::exp(entropy);
  }

  f.logdet_eps = (p_full - z.active_dim) * std::log(eps);
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    f.logdet_eps += std::log(eps + evals[i]);
  }
  return f;
}

double input_variance(const MatrixXd& U) {
  if (U.rows() < 2) return 0.0;
  const Eigen::Index n = U.rows();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const double mean = U.col(j).mean();
    acc += (U.col(j).array() - mean).square().sum() / static_cast<double>(n);
  }
  return acc / static_cast<double>(U.cols());
}

// Everything about the current dataset that candidate scoring reads. The
// before-values of an empty (or sub-minimal) dataset are zero, except the
// eps-padded logdet whose natural floor is logdet(eps I).
struct IgpeBaseline {
  bool has_data = false;
  double state_min = 0.0;
  double lift_logdet = 0.0;
  double lift_eff_rank = 0.0;
  double reg_min = 0.0;
  double u_var = 0.0;
  bool has_whitener = false;
  WhitenTransform wt;
  MatrixXd Xw;             // current states, whitened
  MatrixXd accepted_dirs;  // greedy direction set at the finest resolution
  MatrixXd Psi;            // cached lifted matrix of the current dataset
  double r_min = 0.25;
  double finest_delta = M_PI / 8.0;
};

IgpeBaseline make_baseline(const Dataset& current, const Dictionary& dict,
                           const CertificateConfig& cfg, double dopt_eps) {
  IgpeBaseline b;
  b.r_min = *std::min_element(cfg.radii.begin(), cfg.radii.end());
  b.finest_delta = *std::min_element(cfg.delta.begin(), cfg.delta.end());
  b.lift_logdet = dict.d_psi * std::log(dopt_eps);
  if (current.size() >= 2) {
    b.has_data = true;
    b.Psi = lift_rows(dict, current.X);
    MatrixXd phi(current.size(), dict.d_psi + current.input_dim());
    phi.leftCols(dict.d_psi) = b.Psi;
    phi.rightCols(current.input_dim()) = current.U;

    b.state_min = layer_features(current.X, cfg.var_threshold, dopt_eps)
                      .lambda_min;
    const LayerFeatures lf =
        layer_features(b.Psi, cfg.var_threshold, dopt_eps);
    b.lift_logdet = lf.logdet_eps;
    b.lift_eff_rank = lf.eff_rank;
    b.reg_min = layer_features(phi, cfg.var_threshold, dopt_eps).lambda_min;
    b.u_var = input_variance(current.U);

    if (current.size() >= current.state_dim() + 1) {
      b.wt = fit_whitener(current.X, cfg.eps);
      b.has_whitener = true;
      b.Xw = b.wt.apply(current.X);
      std::vector<VectorXd> dirs;
      for (Eigen::Index k = 0; k < current.size(); ++k) {
        const VectorXd d = b.wt.apply_direction(
            (current.X_next.row(k) - current.X.row(k)).transpose());
        const double norm = d.norm();
        if (norm > cfg.eps) dirs.push_back(d / norm);
      }
      MatrixXd dmat(static_cast<Eigen::Index>(dirs.size()),
                    current.state_dim());
      for (std::size_t i = 0; i < dirs.size(); ++i) {
        dmat.row(static_cast<Eigen::Index>(i)) = dirs[i].transpose();
      }
      const std::vector<int> accepted =
          greedy_direction_set(dmat, b.finest_delta);
      b.accepted_dirs.resize(static_cast<Eigen::Index>(accepted.size()),
                             current.state_dim());
      for (std::size_t i = 0; i < accepted.size(); ++i) {
        b.accepted_dirs.row(static_cast<Eigen::Index>(i)) =
            dmat.row(accepted[i]);
      }
    }
  }
  return b;
}

double score_candidate(const IgpeBaseline& b, const SimulatedCandidate& sc,
                       const Dataset& current, const IgpeWeights& w,
                       const CertificateConfig& cfg, double dopt_eps) {
  if (sc.diverged) return kNegInf;

  const MatrixXd X_union = vstack(current.X, sc.triples.X);
  const MatrixXd U_union = vstack(current.U, sc.triples.U);
  const MatrixXd Psi_union = vstack(b.Psi, sc.Psi);
  MatrixXd Phi_union(Psi_union.rows(), Psi_union.cols() + U_union.cols());
  Phi_union.leftCols(Psi_union.cols()) = Psi_union;
  Phi_union.rightCols(U_union.cols()) = U_union;

  const double state_after =
      layer_features(X_union, cfg.var_threshold, dopt_eps).lambda_min;
  const LayerFeatures lift_after =
      layer_features(Psi_union, cfg.var_threshold, dopt_eps);
  const double reg_after =
      layer_features(Phi_union, cfg.var_threshold, dopt_eps).lambda_min;
  const double u_var_after = input_variance(U_union);

  // Directional novelty: mean over candidate displacement directions of
  // their min angle to the accepted direction set at the finest resolution.
  double novelty = 0.0;
  {
    int count = 0;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < sc.disps.rows(); ++k) {
      VectorXd d = sc.disps.row(k).transpose();
      if (b.has_whitener) d = b.wt.apply_direction(d);
      const double norm = d.norm();
      if (norm <= cfg.eps) continue;
      d /= norm;
      double min_angle = M_PI;
      for (Eigen::Index i = 0; i < b.accepted_dirs.rows(); ++i) {
        const double ang = std::acos(
            std::clamp(d.dot(b.accepted_dirs.row(i).transpose()), -1.0, 1.0));
        min_angle = std::min(min_angle, ang);
      }
      acc += min_angle;
      ++count;
    }
    if (count > 0) novelty = acc / count;
  }

  // Clustering penalty: density of the current samples around the
  // candidate's points at the smallest configured scale. An exact repeat of
  // existing data is maximally penalized; empty space costs nothing.
  double cluster_penalty = 0.0;
  if (b.has_whitener && b.Xw.rows() > 0) {
    const MatrixXd cw = b.wt.apply(sc.triples.X);
    const double r2 = b.r_min * b.r_min;
    Eigen::Index max_count = 0;
    for (Eigen::Index i = 0; i < cw.rows(); ++i) {
      Eigen::Index count = 0;
      for (Eigen::Index j = 0; j < b.Xw.rows(); ++j) {
        if ((b.Xw.row(j) - cw.row(i)).squaredNorm() <= r2) ++count;
      }
      max_count = std::max(max_count, count);
    }
    const double frac =
        static_cast<double>(max_count) / static_cast<double>(b.Xw.rows());
    cluster_penalty = frac / (std::pow(b.r_min, cfg.s) + cfg.eps);
  }

  return w.state_min * (state_after - b.state_min) +
         w.lift_logdet * (lift_after.logdet_eps - b.lift_logdet) +
         w.lift_eff_rank * (lift_after.eff_rank - b.lift_eff_rank) +
         w.reg_min * (reg_after - b.reg_min) + w.novelty * novelty +
         w.u_var * (u_var_after - b.u_var) - w.cluster * cluster_penalty;
}

}  // namespace

double score_igpe(const Dataset& current, const SegmentCandidate& cand,
                  const IgpeWeights& w, const SystemSpec& spec,
                  const AcquireConfig& cfg, double dt) {
  const CertificateConfig certs = cfg.certs.resolved_for_dimension(spec.n_x);
  const SimulatedCandidate sc =
      simulate_candidate(cand, spec, cfg.dict, dt);
  const IgpeBaseline b = make_baseline(current, cfg.dict, certs, cfg.dopt_eps);
  return score_candidate(b, sc, current, w, certs, cfg.dopt_eps);
}

double dopt_objective(const std::vector<MatrixXd>& blocks,
                      const std::vector<int>& subset, double eps) {
  if (blocks.empty()) return 0.0;
  const int p = static_cast<int>(blocks.front().cols());
  MatrixXd m = eps * MatrixXd::Identity(p, p);
  for (int i : subset) m += blocks[i].transpose() * blocks[i];
  return 2.0 * MatrixXd(m.llt().matrixL()).diagonal().array().log().sum();
}

std::vector<int> greedy_dopt(const std::vector<MatrixXd>& blocks, int budget,
                             double eps) {
  if (eps <= 0.0) throw std::invalid_argument("greedy_dopt: eps must be > 0");
  if (budget > static_cast<int>(blocks.size())) {
    throw std::invalid_argument("greedy_dopt: budget exceeds library");
  }
  const int p = blocks.empty() ? 0 : static_cast<int>(blocks.front().cols());
  MatrixXd m = eps * MatrixXd::Identity(p, p);

  std::vector<int> selected;
  std::vector<bool> used(blocks.size(), false);
  for (int round = 0; round < budget; ++round) {
    int best = -1;
    double best_value = kNegInf;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (used[i]) continue;
      const MatrixXd trial = m + blocks[i].transpose() * blocks[i];
      const double value =
          2.0 * MatrixXd(trial.llt().matrixL()).diagonal().array().log().sum();
      if (value > best_value) {
        best_value = value;
        best = static_cast<int>(i);
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    selected.push_back(best);
    m += blocks[best].transpose() * blocks[best];
  }
  return selected;
}

std::vector<int> greedy_eopt(const std::vector<MatrixXd>& blocks, int budget,
                             double eps) {
  if (eps <= 0.0) throw std::invalid_argument("greedy_eopt: eps must be > 0");
  if (budget > static_cast<int>(blocks.size())) {
    throw std::invalid_argument("greedy_eopt: budget exceeds library");
  }
  const int p = blocks.empty() ? 0 : static_cast<int>(blocks.front().cols());
  MatrixXd m = eps * MatrixXd::Identity(p, p);

  std::vector<int> selected;
  std::vector<bool> used(blocks.size(), false);
  for (int round = 0; round < budget; ++round) {
    int best = -1;
    double best_value = kNegInf;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (used[i]) continue;
      const MatrixXd trial = m + blocks[i].transpose() * blocks[i];
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(trial,
                                                 Eigen::EigenvaluesOnly);
      const double value = es.eigenvalues().minCoeff();
      if (value > best_value) {
        best_value = value;
        best = static_cast<int>(i);
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    selected.push_back(best);
    m += blocks[best].transpose() * blocks[best];
  }
  return selected;
}

namespace {

Dataset collect(const std::vector<SimulatedCandidate>& sims,
                const std::vector<int>& indices) {
  Dataset d;
  for (int i : indices) {
    if (sims[i].diverged) {
      throw std::runtime_error("acquire: selected a diverged candidate");
    }
    d.append(sims[i].triples);
  }
  return d;
}

std::vector<int> kcenter_select(const std::vector<SimulatedCandidate>& sims,
                                int budget, double eps) {
  const int n = static_cast<int>(sims.size());
  MatrixXd means(n, sims.front().mean_state.size());
  for (int i = 0; i < n; ++i) means.row(i) = sims[i].mean_state.transpose();
  const MatrixXd mw = fit_whitener(means, eps).apply(means);

  // Whitened candidate means are centered, so the pooled mean is the origin
  // and the farthest-from-mean start is the max-norm row.
  int start = 0;
  double best_norm = -1.0;
  for (int i = 0; i < n; ++i) {
    const double nr = mw.row(i).norm();
    if (nr > best_norm && !sims[i].diverged) {
      best_norm = nr;
      start = i;
    }
  }
  std::vector<int> selected = {start};
  VectorXd min_dist(n);
  for (int i = 0; i < n; ++i) {
    min_dist[i] = (mw.row(i) - mw.row(start)).norm();
  }
  while (static_cast<int>(selected.size()) < budget) {
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      if (sims[i].diverged) continue;
      if (std::find(selected.begin(), selected.end(), i) != selected.end()) {
        continue;
      }
      if (min_dist[i] > best_d) {
        best_d = min_dist[i];
        best = i;
      }
    }
    selected.push_back(best);
    for (int i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], (mw.row(i) - mw.row(best)).norm());
    }
  }
  return selected;
}

Dataset acquire_probing(const MethodSpec& method, const SystemSpec& spec,
                        int budget, int l_seg, double dt,
                        const AcquireConfig& cfg) {
  Rng rng(derive_seed(method.seed, {0xA9E}));
  VectorXd x = sample_initial_state(spec, rng);
  Dataset data;

  const double nyquist = 0.5 / dt;
  const int n_oct = std::max(
      1, static_cast<int>(std::floor(std::log2(nyquist / cfg.ape_base_freq))));

  VectorXd oid_freqs(cfg.oid_n_freqs);
  for (int i = 0; i < cfg.oid_n_freqs; ++i) {
    const double t = (cfg.oid_n_freqs == 1)
                         ? 0.0
                         : static_cast<double>(i) / (cfg.oid_n_freqs - 1);
    oid_freqs[i] = cfg.oid_f_lo * std::pow(cfg.oid_f_hi / cfg.oid_f_lo, t);
  }

  for (int seg = 0; seg < budget; ++seg) {
    MatrixXd inputs(l_seg, spec.n_u);
    if (method.id == MethodId::A_PE) {
      const double freq = cfg.ape_base_freq * std::pow(2.0, seg % n_oct);
      double sigma_min = 0.0;
      if (data.size() >= 2) {
        const Eigen::RowVectorXd mu = data.U.colwise().mean();
        const MatrixXd centered = data.U.rowwise() - mu;
        const MatrixXd cov =
            centered.transpose() * centered / static_cast<double>(data.size());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
        sigma_min = std::max(es.eigenvalues().minCoeff(), 0.0);
      }
      const double amp = std::min(
          spec.input_bound,
          cfg.ape_gain * spec.input_bound / (sigma_min + cfg.certs.eps));
      for (int k = 0; k < l_seg; ++k) {
        inputs(k, 0) = amp * std::sin(2.0 * M_PI * freq * k * dt);
      }
    } else {  // OID
      if (seg % 2 == 0) {
        VectorXd raw(l_seg);
        const int K = cfg.oid_n_freqs;
        for (int k = 0; k < l_seg; ++k) {
          double v = 0.0;
          for (int j = 0; j < K; ++j) {
            const double phase = -M_PI * j * (j - 1) / K;  // Schroeder
            v += std::sin(2.0 * M_PI * oid_freqs[j] * k * dt + phase);
          }
          raw[k] = v;
        }
        const double peak = raw.cwiseAbs().maxCoeff();
        inputs.col(0) = raw * (spec.input_bound / std::max(peak, 1e-12));
      } else {
        const double T = l_seg * dt;
        for (int k = 0; k < l_seg; ++k) {
          const double t = k * dt;
          const double phase =
              cfg.oid_f_lo * t +
              (cfg.oid_f_hi - cfg.oid_f_lo) * t * t / (2.0 * T);
          inputs(k, 0) = spec.input_bound * std::sin(2.0 * M_PI * phase);
        }
      }
    }
    const Trajectory tr = simulate_segment(spec, x, inputs, dt);
    data.append(trajectory_to_dataset(tr));
    x = tr.states.row(tr.states.rows() - 1).transpose();
  }
  return data;
}

}  // namespace

Dataset acquire(const MethodSpec& method, const SystemSpec& spec, int budget,
                int l_seg, double dt, const AcquireConfig& cfg) {
  if (budget < 1) throw std::invalid_argument("acquire: budget must be >= 1");
  spec.validate();

  if (method.id == MethodId::A_PE || method.id == MethodId::OID) {
    return acquire_probing(method, spec, budget, l_seg, dt, cfg);
  }

  if (method.id == MethodId::SOBOL) {
    const int dim = spec.n_x + spec.n_u;
    SobolSequence seq(dim);
    // Each seed reads its own contiguous block of the sequence; the modulus
    // keeps the offset far inside the generator's 2^30 period.
    seq.skip((method.seed % 8192) * static_cast<std::uint64_t>(budget));
    Dataset data;
    for (int i = 0; i < budget; ++i) {
      const VectorXd u01 = seq.next();
      SegmentCandidate c;
      c.x0 = VectorXd(spec.n_x);
      for (int j = 0; j < spec.n_x; ++j) {
        c.x0[j] = spec.init_box(j, 0) +
                  u01[j] * (spec.init_box(j, 1) - spec.init_box(j, 0));
      }
      c.u_const = VectorXd(spec.n_u);
      for (int j = 0; j < spec.n_u; ++j) {
        c.u_const[j] =
            -spec.input_bound + u01[spec.n_x + j] * 2.0 * spec.input_bound;
      }
      c.length = l_seg;
      const SimulatedCandidate sc = simulate_candidate(c, spec, cfg.dict, dt);
      if (sc.diverged) throw std::runtime_error("acquire: SOBOL divergence");
      data.append(sc.triples);
    }
    return data;
  }

  if (budget > cfg.library_size) {
    throw std::invalid_argument("acquire: budget exceeds library_size");
  }
  const auto lib =
      generate_library(spec, method.seed, cfg.library_size, l_seg, dt);
  const auto sims = simulate_library(lib, spec, cfg.dict, dt);

  switch (method.id) {
    case MethodId::RANDOM: {
      std::vector<int> idx(static_cast<std::size_t>(budget));
      for (int i = 0; i < budget; ++i) idx[static_cast<std::size_t>(i)] = i;
      return collect(sims, idx);
    }
    case MethodId::STATE_KCENTER:
      return collect(sims, kcenter_select(sims, budget, cfg.certs.eps));
    case MethodId::LIFT_DOPT: {
      std::vector<MatrixXd> blocks;
      for (const auto& s : sims) {
        blocks.push_back(s.diverged ? MatrixXd::Zero(1, cfg.dict.d_psi)
                                    : s.Psi);
      }
      return collect(sims, greedy_dopt(blocks, budget, cfg.dopt_eps));
    }
    case MethodId::REG_DOPT:
    case MethodId::REG_EOPT: {
      std::vector<MatrixXd> blocks;
      const int p = cfg.dict.d_psi + spec.n_u;
      for (const auto& s : sims) {
        blocks.push_back(s.diverged ? MatrixXd::Zero(1, p) : s.Phi);
      }
      return collect(sims, method.id == MethodId::REG_DOPT
                               ? greedy_dopt(blocks, budget, cfg.dopt_eps)
                               : greedy_eopt(blocks, budget, cfg.dopt_eps));
    }
    default:
      break;
  }

  // IGPE family: myopic one-step-lookahead selection without replacement.
  const CertificateConfig certs = cfg.certs.resolved_for_dimension(spec.n_x);
  Dataset data;
  std::vector<bool> used(sims.size(), false);
  for (int round = 0; round < budget; ++round) {
    const IgpeBaseline base =
        make_baseline(data, cfg.dict, certs, cfg.dopt_eps);
    int best = -1;
    double best_score = kNegInf;
    for (std::size_t i = 0; i < sims.size(); ++i) {
      if (used[i]) continue;
      const double s = score_candidate(base, sims[i], data, method.weights,
                                       certs, cfg.dopt_eps);
      if (s > best_score) {
        best_score = s;
        best = static_cast<int>(i);
      }
    }
    if (best < 0 || sims[static_cast<std::size_t>(best)].diverged) {
      throw std::runtime_error("acquire: no usable candidate left");
    }
    used[static_cast<std::size_t>(best)] = true;
    data.append(sims[static_cast<std::size_t>(best)].triples);
  }
  return data;
}

}  // namespace koopcert
