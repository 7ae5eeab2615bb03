#pragma once

#include "koopcert/certificates.hpp"
#include "koopcert/lifting.hpp"
#include "koopcert/systems.hpp"
#include "koopcert/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace koopcert {

enum class MethodId {
  RANDOM,
  SOBOL,
  STATE_KCENTER,
  LIFT_DOPT,
  REG_DOPT,
  REG_EOPT,
  A_PE,
  OID,
  GPE_STATE,
  IGPE_DOPT,
  IGPE_NO_DOPT,
  IGPE_NO_DIR,
  IGPE_NO_CLUSTER,
  IGPE_WHALF,
  IGPE_UNIFORM,
  IGPE_REG_HEAVY,
  IGPE_CLUSTER_HEAVY,
};

std::string to_string(MethodId id);
MethodId method_id_from_string(const std::string& name);
const std::vector<std::string>& all_method_names();
bool is_igpe_family(MethodId id);

/// Scoring weights of the certificate-driven selector (Table-1 defaults).
struct IgpeWeights {
  double state_min = 0.75;
  double lift_logdet = 0.80;
  double lift_eff_rank = 0.35;
  double reg_min = 0.35;
  double novelty = 0.30;
  double u_var = 0.10;
  double cluster = 0.25;

  bool operator==(const IgpeWeights&) const = default;
};

/// Weights for a method id: ablations zero exactly one term, the weight
/// variants re-emphasize monotonically (WHALF halves all, UNIFORM sets all
/// to 1/7, REG-HEAVY triples reg_min, CLUSTER-HEAVY triples cluster,
/// GPE-STATE keeps only the state-layer terms).
IgpeWeights weights_for(MethodId id);

struct MethodSpec {
  MethodId id = MethodId::RANDOM;
  IgpeWeights weights;
  std::uint64_t seed = 0;
};

MethodSpec make_method(MethodId id, std::uint64_t seed);

struct SegmentCandidate {
  VectorXd x0;
  VectorXd u_const;
  int length = 0;
};

struct AcquireConfig {
  Dictionary dict;
  CertificateConfig certs;
  int library_size = 128;
  double dopt_eps = 1e-6;
  // A-PE probing: frequency doubles per segment (wrapping below Nyquist),
  // amplitude tracks the inverse input-autocovariance floor.
  double ape_base_freq = 0.25;
  double ape_gain = 0.5;
  // OID probing: multisine with Schroeder phases alternating with a linear
  // chirp over the same band.
  int oid_n_freqs = 8;
  double oid_f_lo = 0.1;
  double oid_f_hi = 5.0;
};

std::vector<SegmentCandidate> generate_library(const SystemSpec& spec,
                                               std::uint64_t seed,
                                               int library_size, int l_seg,
                                               double dt);

/// One-step-lookahead certificate score of appending `cand` to `current`.
/// Diverging candidates score -infinity.
double score_igpe(const Dataset& current, const SegmentCandidate& cand,
                  const IgpeWeights& w, const SystemSpec& spec,
                  const AcquireConfig& cfg, double dt);

/// Greedy maximization of F(S) = logdet(eps I + sum_{i in S} blocks[i]),
/// ties broken toward the lowest index.
std::vector<int> greedy_dopt(const std::vector<MatrixXd>& blocks, int budget,
                             double eps);

double dopt_objective(const std::vector<MatrixXd>& blocks,
                      const std::vector<int>& subset, double eps);

/// Greedy maximization of lambda_min(eps I + sum blocks).
std::vector<int> greedy_eopt(const std::vector<MatrixXd>& blocks, int budget,
                             double eps);

Dataset acquire(const MethodSpec& method, const SystemSpec& spec, int budget,
                int l_seg, double dt, const AcquireConfig& cfg);

}  // namespace koopcert
