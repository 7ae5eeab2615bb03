#include "koopcert/harness.hpp"
#include "koopcert/theory_suite.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace koopcert;

// "0-9" or "0,3,7" -> list of ints.
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  const auto dash = text.find('-', text.front() == '-' ? 1 : 0);
  if (dash != std::string::npos && text.find(',') == std::string::npos) {
    const int lo = std::stoi(text.substr(0, dash));
    const int hi = std::stoi(text.substr(dash + 1));
    for (int i = lo; i <= hi; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

struct PresetFlags {
  std::string output_dir;
  std::string seeds;
  std::string budgets;
  int budget = -1;
  int workers = 0;
  std::string config;
  std::string format = "both";
};

int run_preset_command(const std::string& name, const PresetFlags& flags) {
  HarnessConfig cfg = flags.config.empty()
                          ? HarnessConfig::defaults()
                          : HarnessConfig::from_json_file(flags.config);
  ExperimentPreset preset = make_preset(name);
  if (!flags.seeds.empty()) preset.seeds = parse_int_list(flags.seeds);
  if (!flags.budgets.empty()) preset.budgets = parse_int_list(flags.budgets);
  if (flags.budget > 0) preset.budgets = {flags.budget};

  const int workers = flags.workers > 0
                          ? flags.workers
                          : static_cast<int>(std::max(
                                1u, std::thread::hardware_concurrency()));
  std::cerr << "preset " << name << ": " << preset.case_count()
            << " cases, " << workers << " worker(s)\n";

  const auto rows = run_preset(cfg, preset, workers, /*progress=*/true);
  const std::string out_dir =
      flags.output_dir.empty() ? "results/" + name : flags.output_dir;
  emit_tables(rows, preset, cfg, out_dir, flags.format);

  const auto failed =
      std::count_if(rows.begin(), rows.end(),
                    [](const CaseResult& r) { return !r.ok; });
  std::cerr << "wrote tables to " << out_dir << " (" << failed
            << " failed cases)\n";
  return failed == 0 ? 0 : 1;
}

int run_check_theory(const std::string& output_dir,
                     const std::string& config) {
  const HarnessConfig cfg = config.empty()
                                ? HarnessConfig::defaults()
                                : HarnessConfig::from_json_file(config);
  const auto checks = run_theory_suite(cfg);
  std::filesystem::create_directories(output_dir);
  write_theory_csv(checks, std::filesystem::path(output_dir) /
                               "theory_checks.csv");
  int violations = 0;
  for (const auto& c : checks) {
    if (!c.satisfied) {
      ++violations;
      std::cout << "[FAIL] " << c.name << " lhs=" << format_double(c.lhs)
                << " rhs=" << format_double(c.rhs) << "\n";
    }
  }
  std::cout << checks.size() << " checks, " << violations << " violation(s)"
            << std::endl;
  return violations == 0 ? 0 : 1;
}

int run_report(const std::string& input, int n_x, int n_u, int degree) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "cannot open " << input << "\n";
    return 2;
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (numeric && !row.empty()) rows.push_back(std::move(row));
  }
  const int want = 2 * n_x + n_u;
  Dataset data;
  data.X.resize(static_cast<Eigen::Index>(rows.size()), n_x);
  data.U.resize(static_cast<Eigen::Index>(rows.size()), n_u);
  data.X_next.resize(static_cast<Eigen::Index>(rows.size()), n_x);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != want) {
      std::cerr << "row " << i << ": expected " << want << " columns\n";
      return 2;
    }
    for (int j = 0; j < n_x; ++j) data.X(static_cast<Eigen::Index>(i), j) = rows[i][j];
    for (int j = 0; j < n_u; ++j) {
      data.U(static_cast<Eigen::Index>(i), j) = rows[i][n_x + j];
    }
    for (int j = 0; j < n_x; ++j) {
      data.X_next(static_cast<Eigen::Index>(i), j) = rows[i][n_x + n_u + j];
    }
  }

  const Dictionary dict = Dictionary::monomials(n_x, degree);
  CertificateConfig certs;
  const CertificateReport rep =
      full_report(data, dict, certs.resolved_for_dimension(n_x));

  nlohmann::json j;
  j["n_samples"] = data.size();
  j["c_dir"] = rep.c_dir;
  j["c_fr"] = rep.c_fr;
  j["c_rad"] = rep.c_rad;
  j["state_iso"] = rep.state_iso;
  j["lift_iso"] = rep.lift_iso;
  j["regression_iso"] = rep.regression_iso;
  j["regression_cov_z_min"] = rep.c_reg;
  j["sigma_min_bar_phi"] = rep.sigma_min_bar_phi;
  j["regression_logdet"] = rep.regression_logdet;
  j["active_dim"] = rep.active_dim;
  j["active_rank"] = rep.active_rank;
  j["std_gpe_index"] = rep.c_gpe;
  j["bottleneck"] = rep.bottleneck;
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int run_bench_timing(const std::string& config) {
  const HarnessConfig cfg = config.empty()
                                ? HarnessConfig::defaults()
                                : HarnessConfig::from_json_file(config);
  ExperimentPreset preset;
  preset.name = "bench-timing";
  preset.methods = {"RANDOM",   "SOBOL",    "STATE-KCENTER", "LIFT-DOPT",
                    "REG-DOPT", "REG-EOPT", "A-PE",          "OID",
                    "GPE-STATE", "IGPE-DOPT"};
  preset.seeds = {0};
  preset.budgets = {8};
  preset.l_seg = 8;
  preset.pred_horizon = 40;
  preset.ctrl_horizon = 20;

  std::printf("%-20s %12s %12s %12s\n", "method", "mean_s", "min_s", "max_s");
  for (const auto& method : preset.methods) {
    double total = 0.0, lo = 1e300, hi = 0.0;
    for (const auto& system : preset.systems) {
      const CaseResult r = run_case(cfg, preset, system, method, 0, 8);
      if (!r.ok) {
        std::cerr << "bench case failed: " << r.error << "\n";
        return 1;
      }
      total += r.wall_clock_s;
      lo = std::min(lo, r.wall_clock_s);
      hi = std::max(hi, r.wall_clock_s);
    }
    std::printf("%-20s %12.4f %12.4f %12.4f\n", method.c_str(),
                total / static_cast<double>(preset.systems.size()), lo, hi);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Multilayer data-quality certificates and certificate-driven data "
      "acquisition for EDMDc identification"};
  app.require_subcommand(1);

  PresetFlags flags;
  for (const auto& name : preset_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " preset");
    sub->add_option("--output-dir", flags.output_dir, "output directory");
    sub->add_option("--seeds", flags.seeds, "seed range, e.g. 0-9 or 0,2,5");
    sub->add_option("--budgets", flags.budgets, "budget list, e.g. 8,20");
    sub->add_option("--budget", flags.budget, "single budget override");
    sub->add_option("--workers", flags.workers, "worker threads");
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--format", flags.format, "csv, md, or both")
        ->check(CLI::IsMember({"csv", "md", "both"}));
  }

  std::string theory_out = "results/theory";
  std::string theory_config;
  CLI::App* theory =
      app.add_subcommand("check-theory", "run every theory verification");
  theory->add_option("--output-dir", theory_out, "output directory");
  theory->add_option("--config", theory_config, "JSON config file");

  std::string report_input;
  int report_nx = 2, report_nu = 1, report_degree = 3;
  CLI::App* report = app.add_subcommand(
      "report", "recompute a certificate report for a dataset CSV "
                "(columns: x..., u..., x_next...)");
  report->add_option("--input", report_input, "dataset CSV")->required();
  report->add_option("--nx", report_nx, "state dimension");
  report->add_option("--nu", report_nu, "input dimension");
  report->add_option("--degree", report_degree, "dictionary degree");

  std::string bench_config;
  CLI::App* bench = app.add_subcommand(
      "bench-timing", "lightweight per-method timing loop");
  bench->add_option("--config", bench_config, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return (e.get_exit_code() == 0) ? 0 : 2;
  }

  try {
    for (const auto& name : preset_names()) {
      if (app.got_subcommand(name)) return run_preset_command(name, flags);
    }
    if (app.got_subcommand(theory)) {
      return run_check_theory(theory_out, theory_config);
    }
    if (app.got_subcommand(report)) {
      return run_report(report_input, report_nx, report_nu, report_degree);
    }
    if (app.got_subcommand(bench)) return run_bench_timing(bench_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
