#pragma once

#include "koopcert/acquisition.hpp"
#include "koopcert/certificates.hpp"
#include "koopcert/downstream.hpp"
#include "koopcert/systems.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace koopcert {

struct SystemConfig {
  SystemSpec spec;
  int dict_degree = 3;
};

/// One configuration object for the whole pipeline, JSON-overridable.
struct HarnessConfig {
  std::map<std::string, SystemConfig> systems;  // keyed by system name
  CertificateConfig certs;  // also carries var_threshold / rank_tol
  int library_size = 128;
  double dopt_eps = 1e-6;
  double ape_base_freq = 0.25;
  double ape_gain = 0.5;
  int oid_n_freqs = 8;
  double oid_f_lo = 0.1;
  double oid_f_hi = 5.0;
  TaskConfig tasks;
  double fit_lambda = 0.0;
  int n_boot = 10000;
  std::uint64_t boot_seed = 12345;

  static HarnessConfig defaults();
  static HarnessConfig from_json_file(const std::filesystem::path& path);
  void apply_json(const std::string& json_text);

  AcquireConfig acquire_config(const std::string& system) const;
};

struct ExperimentPreset {
  std::string name;
  std::vector<std::string> systems = {"duffing", "vdp", "lorenz"};
  std::vector<std::string> methods;
  std::vector<int> seeds;
  std::vector<int> budgets;
  std::vector<int> degrees;  // empty: per-system configured degree
  int l_seg = 12;
  double dt = 0.01;
  int pred_horizon = 200;
  int ctrl_horizon = 100;

  std::size_t case_count() const;
};

ExperimentPreset make_preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// One experiment row; metric column names follow the external CSV schema.
struct CaseResult {
  std::string system;
  std::string method;
  int seed = 0;
  int budget = 0;
  int degree = 0;
  int n_samples = 0;
  double state_iso = 0.0;
  double lift_iso = 0.0;
  double regression_iso = 0.0;
  double regression_cov_z_min = 0.0;
  double sigma_min_bar_phi = 0.0;
  double regression_logdet = 0.0;
  double active_rank = 0.0;
  double active_dim = 0.0;
  double std_gpe_index = 0.0;
  double one_step_lift_rmse = 0.0;
  double one_step_state_rmse = 0.0;
  double open_loop_rmse = 0.0;
  double tracking_rmse = 0.0;
  bool prediction_failed = false;
  bool control_failed = false;
  double wall_clock_s = 0.0;
  bool ok = true;
  std::string error;
};

/// Names and accessors of the numeric metric columns, in schema order.
const std::vector<std::string>& metric_names();
double metric_value(const CaseResult& row, const std::string& name);

CaseResult run_case(const HarnessConfig& cfg, const ExperimentPreset& preset,
                    const std::string& system, const std::string& method,
                    int seed, int budget,
                    std::optional<int> degree_override = std::nullopt);

/// Runs the whole preset grid. Cases execute on `workers` threads; results
/// come back in grid order regardless of scheduling.
std::vector<CaseResult> run_preset(const HarnessConfig& cfg,
                                   const ExperimentPreset& preset, int workers,
                                   bool progress = false);

struct SummaryRow {
  std::string system;
  std::string method;
  int budget = 0;
  int n = 0;
  std::map<std::string, double> mean;
  std::map<std::string, double> ci_lo;
  std::map<std::string, double> ci_hi;
  double prediction_failure_rate = 0.0;
  double control_failure_rate = 0.0;
  // Paired effect sizes vs IGPE-DOPT for the downstream metrics.
  std::map<std::string, double> dz;
  bool dz_flagged = false;   // zero-variance pairing collapsed to 0
  bool dz_missing = false;   // no IGPE-DOPT partner rows
};

std::vector<SummaryRow> summarize(const std::vector<CaseResult>& rows,
                                  int n_boot, std::uint64_t boot_seed);

struct QualityRow {
  std::string metric;
  int n_rows = 0;
  int n_nan = 0;
  int n_nonfinite = 0;
  int n_failures = 0;
};

std::vector<QualityRow> quality_checks(const std::vector<CaseResult>& rows);

/// Writes cases.csv, the applicable table CSVs with markdown mirrors, and
/// the figure-data CSVs under output_dir/tables and output_dir/figures.
void emit_tables(const std::vector<CaseResult>& rows,
                 const ExperimentPreset& preset, const HarnessConfig& cfg,
                 const std::filesystem::path& output_dir,
                 const std::string& format = "both");

std::string format_double(double v);

}  // namespace koopcert
