#include "koopcert/harness.hpp"

#include "koopcert/edmdc.hpp"
#include "koopcert/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace koopcert {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

HarnessConfig HarnessConfig::defaults() {
  HarnessConfig cfg;
  for (SystemId id : {SystemId::duffing, SystemId::vdp, SystemId::lorenz}) {
    SystemConfig sc;
    sc.spec = make_system(id);
    sc.dict_degree = (id == SystemId::lorenz) ? 2 : 3;
    cfg.systems[to_string(id)] = sc;
  }
  return cfg;
}

AcquireConfig HarnessConfig::acquire_config(const std::string& system) const {
  const auto it = systems.find(system);
  if (it == systems.end()) {
    throw std::invalid_argument("unknown system in config: " + system);
  }
  AcquireConfig ac;
  ac.dict = Dictionary::monomials(it->second.spec.n_x, it->second.dict_degree);
  ac.certs = certs;
  ac.library_size = library_size;
  ac.dopt_eps = dopt_eps;
  ac.ape_base_freq = ape_base_freq;
  ac.ape_gain = ape_gain;
  ac.oid_n_freqs = oid_n_freqs;
  ac.oid_f_lo = oid_f_lo;
  ac.oid_f_hi = oid_f_hi;
  return ac;
}

void HarnessConfig::apply_json(const std::string& json_text) {
  using nlohmann::json;
  const json j = json::parse(json_text);

  if (j.contains("systems")) {
    for (const auto& [name, js] : j.at("systems").items()) {
      auto it = systems.find(name);
      if (it == systems.end()) {
        throw std::invalid_argument("config: unknown system " + name);
      }
      SystemConfig& sc = it->second;
      if (js.contains("params")) {
        for (const auto& [k, v] : js.at("params").items()) {
          sc.spec.params[k] = v.get<double>();
        }
      }
      if (js.contains("input_bound")) {
        sc.spec.input_bound = js.at("input_bound").get<double>();
      }
      if (js.contains("init_box")) {
        const auto& box = js.at("init_box");
        for (int i = 0; i < sc.spec.n_x; ++i) {
          sc.spec.init_box(i, 0) = box.at(i).at(0).get<double>();
          sc.spec.init_box(i, 1) = box.at(i).at(1).get<double>();
        }
      }
      if (js.contains("dict_degree")) {
        sc.dict_degree = js.at("dict_degree").get<int>();
      }
    }
  }
  if (j.contains("certificates")) {
    const auto& jc = j.at("certificates");
    auto get = [&](const char* key, auto& field) {
      if (jc.contains(key)) {
        field = jc.at(key).get<std::decay_t<decltype(field)>>();
      }
    };
    get("delta", certs.delta);
    get("m_star", certs.m_star);
    get("radii", certs.radii);
    get("rho_max", certs.rho_max);
    get("radial_bins", certs.radial_bins);
    get("tau_state", certs.tau_state);
    get("tau_lift", certs.tau_lift);
    get("tau_reg", certs.tau_reg);
    get("eps", certs.eps);
    get("var_threshold", certs.var_threshold);
    get("rank_tol", certs.rank_tol);
  }
  if (j.contains("acquisition")) {
    const auto& ja = j.at("acquisition");
    if (ja.contains("library_size")) library_size = ja.at("library_size");
    if (ja.contains("dopt_eps")) dopt_eps = ja.at("dopt_eps");
    if (ja.contains("ape_base_freq")) ape_base_freq = ja.at("ape_base_freq");
    if (ja.contains("ape_gain")) ape_gain = ja.at("ape_gain");
    if (ja.contains("oid_n_freqs")) oid_n_freqs = ja.at("oid_n_freqs");
    if (ja.contains("oid_f_lo")) oid_f_lo = ja.at("oid_f_lo");
    if (ja.contains("oid_f_hi")) oid_f_hi = ja.at("oid_f_hi");
  }
  if (j.contains("tasks")) {
    const auto& jt = j.at("tasks");
    if (jt.contains("pred_horizon")) tasks.pred_horizon = jt.at("pred_horizon");
    if (jt.contains("ctrl_horizon")) tasks.ctrl_horizon = jt.at("ctrl_horizon");
    if (jt.contains("n_eval_rollouts")) {
      tasks.n_eval_rollouts = jt.at("n_eval_rollouts");
    }
    if (jt.contains("lqr_state_weight")) {
      tasks.lqr_state_weight = jt.at("lqr_state_weight");
    }
    if (jt.contains("lqr_input_weight")) {
      tasks.lqr_input_weight = jt.at("lqr_input_weight");
    }
    if (jt.contains("failure_threshold")) {
      tasks.failure_threshold = jt.at("failure_threshold");
    }
  }
  if (j.contains("fit_lambda")) fit_lambda = j.at("fit_lambda");
  if (j.contains("summary")) {
    const auto& js = j.at("summary");
    if (js.contains("n_boot")) n_boot = js.at("n_boot");
    if (js.contains("boot_seed")) boot_seed = js.at("boot_seed");
  }
}

HarnessConfig HarnessConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  HarnessConfig cfg = defaults();
  cfg.apply_json(ss.str());
  return cfg;
}

std::size_t ExperimentPreset::case_count() const {
  const std::size_t deg = degrees.empty() ? 1 : degrees.size();
  return systems.size() * methods.size() * seeds.size() * budgets.size() * deg;
}

namespace {

std::vector<int> range(int lo, int hi) {  // inclusive
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "smoke",
      "major-revision",
      "major-budget-ablation",
      "component-ablation",
      "degree-ablation",
      "weight-sensitivity"};
  return names;
}

ExperimentPreset make_preset(const std::string& name) {
  ExperimentPreset p;
  p.name = name;
  if (name == "smoke") {
    p.methods = {"RANDOM", "SOBOL", "STATE-KCENTER", "REG-EOPT", "IGPE-DOPT"};
    p.seeds = range(0, 2);
    p.budgets = {8, 20};
  } else if (name == "major-revision") {
    p.methods = {"RANDOM",   "SOBOL", "STATE-KCENTER", "LIFT-DOPT",
                 "REG-DOPT", "REG-EOPT", "A-PE", "OID",
                 "GPE-STATE", "IGPE-DOPT"};
    p.seeds = range(0, 19);
    p.budgets = {40};
  } else if (name == "major-budget-ablation") {
    p.methods = {"RANDOM", "SOBOL", "STATE-KCENTER", "REG-EOPT", "IGPE-DOPT"};
    p.seeds = range(0, 9);
    p.budgets = {8, 12, 20, 40, 80};
  } else if (name == "component-ablation") {
    p.methods = {"IGPE-DOPT", "IGPE-NO-DOPT", "IGPE-NO-DIR",
                 "IGPE-NO-CLUSTER"};
    p.seeds = range(0, 9);
    p.budgets = {40};
  } else if (name == "degree-ablation") {
    p.methods = {"RANDOM", "REG-EOPT", "IGPE-DOPT"};
    p.seeds = range(0, 4);
    p.budgets = {40};
    p.degrees = {2, 3};
  } else if (name == "weight-sensitivity") {
    p.methods = {"IGPE-DOPT", "IGPE-WHALF", "IGPE-UNIFORM", "IGPE-REG-HEAVY",
                 "IGPE-CLUSTER-HEAVY"};
    p.seeds = range(0, 9);
    p.budgets = {40};
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return p;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "state_iso",        "lift_iso",
      "regression_iso",   "regression_cov_z_min",
      "sigma_min_bar_phi", "regression_logdet",
      "active_rank",      "active_dim",
      "std_gpe_index",    "one_step_lift_rmse",
      "one_step_state_rmse", "open_loop_rmse",
      "tracking_rmse"};
  return names;
}

double metric_value(const CaseResult& r, const std::string& name) {
  if (name == "state_iso") return r.state_iso;
  if (name == "lift_iso") return r.lift_iso;
  if (name == "regression_iso") return r.regression_iso;
  if (name == "regression_cov_z_min") return r.regression_cov_z_min;
  if (name == "sigma_min_bar_phi") return r.sigma_min_bar_phi;
  if (name == "regression_logdet") return r.regression_logdet;
  if (name == "active_rank") return r.active_rank;
  if (name == "active_dim") return r.active_dim;
  if (name == "std_gpe_index") return r.std_gpe_index;
  if (name == "one_step_lift_rmse") return r.one_step_lift_rmse;
  if (name == "one_step_state_rmse") return r.one_step_state_rmse;
  if (name == "open_loop_rmse") return r.open_loop_rmse;
  if (name == "tracking_rmse") return r.tracking_rmse;
  throw std::invalid_argument("unknown metric: " + name);
}

CaseResult run_case(const HarnessConfig& cfg, const ExperimentPreset& preset,
                    const std::string& system, const std::string& method,
                    int seed, int budget, std::optional<int> degree_override) {
  CaseResult row;
  row.system = system;
  row.method = method;
  row.seed = seed;
  row.budget = budget;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto sys_it = cfg.systems.find(system);
    if (sys_it == cfg.systems.end()) {
      throw std::invalid_argument("unknown system: " + system);
    }
    const SystemSpec& spec = sys_it->second.spec;
    const int degree =
        degree_override.value_or(sys_it->second.dict_degree);
    row.degree = degree;

    AcquireConfig ac = cfg.acquire_config(system);
    ac.dict = Dictionary::monomials(spec.n_x, degree);

    const std::uint64_t case_seed = derive_seed(
        static_cast<std::uint64_t>(seed),
        {fnv1a(system), fnv1a(method), static_cast<std::uint64_t>(budget),
         static_cast<std::uint64_t>(degree)});
    MethodSpec mspec = make_method(method_id_from_string(method), case_seed);

    const Dataset data =
        acquire(mspec, spec, budget, preset.l_seg, preset.dt, ac);
    row.n_samples = static_cast<int>(data.size());

    const CertificateConfig certs = ac.certs.resolved_for_dimension(spec.n_x);
    const CertificateReport rep = full_report(data, ac.dict, certs);
    row.state_iso = rep.state_iso;
    row.lift_iso = rep.lift_iso;
    row.regression_iso = rep.regression_iso;
    row.regression_cov_z_min = rep.c_reg;
    row.sigma_min_bar_phi = rep.sigma_min_bar_phi;
    row.regression_logdet = rep.regression_logdet;
    row.active_rank = rep.active_rank;
    row.active_dim = rep.active_dim;
    row.std_gpe_index = rep.c_gpe;

    const LiftedDesign design = build_design(data, ac.dict);
    const EdmdcThresholds th{certs.var_threshold, certs.rank_tol};
    const EdmdcModel model = fit(design, cfg.fit_lambda, th);
    const OneStepErrors ose = one_step_errors(model, data);
    row.one_step_lift_rmse = ose.lift_rmse;
    row.one_step_state_rmse = ose.state_rmse;

    TaskConfig task = cfg.tasks;
    task.pred_horizon = preset.pred_horizon;
    task.ctrl_horizon = preset.ctrl_horizon;
    task.dt = preset.dt;
    const TaskResult tr =
        run_tasks(model, spec, task, derive_seed(case_seed, {0x7A5C}));
    row.open_loop_rmse = tr.open_loop_rmse;
    row.tracking_rmse = tr.tracking_rmse;
    row.prediction_failed = tr.prediction_failed;
    row.control_failed = tr.control_failed;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return row;
}

std::vector<CaseResult> run_preset(const HarnessConfig& cfg,
                                   const ExperimentPreset& preset, int workers,
                                   bool progress) {
  struct CaseTuple {
    std::string system, method;
    int seed, budget;
    std::optional<int> degree;
  };
  std::vector<CaseTuple> grid;
  for (const auto& system : preset.systems) {
    for (const auto& method : preset.methods) {
      for (int budget : preset.budgets) {
        if (preset.degrees.empty()) {
          for (int seed : preset.seeds) {
            grid.push_back({system, method, seed, budget, std::nullopt});
          }
        } else {
          for (int degree : preset.degrees) {
            for (int seed : preset.seeds) {
              grid.push_back({system, method, seed, budget, degree});
            }
          }
        }
      }
    }
  }

  std::vector<CaseResult> results(grid.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) break;
      const CaseTuple& c = grid[i];
      results[i] = run_case(cfg, preset, c.system, c.method, c.seed, c.budget,
                            c.degree);
      const std::size_t k = ++done;
      if (progress) {
        std::ostringstream os;
        os << "[" << k << "/" << grid.size() << "] " << c.system << " "
           << c.method << " seed=" << c.seed << " budget=" << c.budget << " ("
           << format_double(results[i].wall_clock_s) << "s)"
           << (results[i].ok ? "" : " FAILED: " + results[i].error) << "\n";
        std::cerr << os.str();
      }
    }
  };

  const int n_workers = std::max(
      1, std::min<int>(workers, static_cast<int>(grid.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

namespace {

struct GroupKey {
  std::string system, method;
  int budget;
  bool operator<(const GroupKey& o) const {
    return std::tie(system, method, budget) <
           std::tie(o.system, o.method, o.budget);
  }
};

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) /
                         static_cast<double>(v.size());
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<CaseResult>& rows,
                                  int n_boot, std::uint64_t boot_seed) {
  std::map<GroupKey, std::vector<const CaseResult*>> groups;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    groups[{r.system, r.method, r.budget}].push_back(&r);
  }

  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    s.system = key.system;
    s.method = key.method;
    s.budget = key.budget;
    s.n = static_cast<int>(members.size());

    for (const auto& metric : metric_names()) {
      std::vector<double> v;
      v.reserve(members.size());
      for (const CaseResult* r : members) {
        v.push_back(metric_value(*r, metric));
      }
      // Resampling acts on the sorted multiset so the CI is invariant to
      // row order.
      std::sort(v.begin(), v.end());
      const double m = mean_of(v);
      s.mean[metric] = m;

      // Percentile bootstrap over the group, seeded per (group, metric).
      Rng rng(derive_seed(boot_seed, {fnv1a(key.system), fnv1a(key.method),
                                      static_cast<std::uint64_t>(key.budget),
                                      fnv1a(metric)}));
      std::vector<double> boot(static_cast<std::size_t>(n_boot));
      const std::size_t n = v.size();
      for (int b = 0; b < n_boot; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += v[static_cast<std::size_t>(rng.next_u64() % n)];
        }
        boot[static_cast<std::size_t>(b)] = acc / static_cast<double>(n);
      }
      std::sort(boot.begin(), boot.end());
      const auto lo_idx = static_cast<std::size_t>(
          std::floor(0.025 * static_cast<double>(n_boot)));
      const auto hi_idx = static_cast<std::size_t>(
          std::ceil(0.975 * static_cast<double>(n_boot))) - 1;
      s.ci_lo[metric] = boot[std::min(lo_idx, boot.size() - 1)];
      s.ci_hi[metric] = boot[std::min(hi_idx, boot.size() - 1)];
    }

    int pred_fail = 0, ctrl_fail = 0;
    for (const CaseResult* r : members) {
      pred_fail += r->prediction_failed ? 1 : 0;
      ctrl_fail += r->control_failed ? 1 : 0;
    }
    s.prediction_failure_rate = static_cast<double>(pred_fail) / s.n;
    s.control_failure_rate = static_cast<double>(ctrl_fail) / s.n;

    // Paired effect size vs IGPE-DOPT at matched (system, seed, budget).
    const auto igpe_it = groups.find({key.system, "IGPE-DOPT", key.budget});
    for (const std::string metric : {"open_loop_rmse", "tracking_rmse"}) {
      if (igpe_it == groups.end()) {
        s.dz_missing = true;
        continue;
      }
      std::map<int, double> ours, theirs;
      for (const CaseResult* r : members) {
        ours[r->seed] = metric_value(*r, metric);
      }
      for (const CaseResult* r : igpe_it->second) {
        theirs[r->seed] = metric_value(*r, metric);
      }
      std::vector<double> diffs;
      for (const auto& [seed, value] : ours) {
        const auto it = theirs.find(seed);
        if (it != theirs.end()) diffs.push_back(value - it->second);
      }
      if (diffs.empty()) {
        s.dz_missing = true;
        continue;
      }
      const double dm = mean_of(diffs);
      double var = 0.0;
      for (double d : diffs) var += (d - dm) * (d - dm);
      var = diffs.size() > 1 ? var / static_cast<double>(diffs.size() - 1)
                             : 0.0;
      const double sd = std::sqrt(var);
      if (sd > 0.0) {
        s.dz[metric] = dm / sd;
      } else {
        s.dz[metric] = 0.0;
        s.dz_flagged = true;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<QualityRow> quality_checks(const std::vector<CaseResult>& rows) {
  std::vector<QualityRow> out;
  for (const auto& metric : metric_names()) {
    QualityRow q;
    q.metric = metric;
    for (const auto& r : rows) {
      if (!r.ok) continue;
      ++q.n_rows;
      const double v = metric_value(r, metric);
      if (std::isnan(v)) ++q.n_nan;
      if (!std::isfinite(v)) ++q.n_nonfinite;
    }
    out.push_back(q);
  }
  QualityRow pred{"prediction_failed", 0, 0, 0, 0};
  QualityRow ctrl{"control_failed", 0, 0, 0, 0};
  for (const auto& r : rows) {
    if (!r.ok) continue;
    ++pred.n_rows;
    ++ctrl.n_rows;
    pred.n_failures += r.prediction_failed ? 1 : 0;
    ctrl.n_failures += r.control_failed ? 1 : 0;
  }
  out.push_back(pred);
  out.push_back(ctrl);
  return out;
}

namespace {

class Table {
 public:
  explicit Table(std::vector<std::string> header)
      : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_joined(out, header_, ",");
    for (const auto& row : rows_) write_joined(out, row, ",");
  }

  void write_markdown(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "| ";
    write_joined(out, header_, " | ", " |");
    out << "|";
    for (std::size_t i = 0; i < header_.size(); ++i) out << " --- |";
    out << "\n";
    for (const auto& row : rows_) {
      out << "| ";
      write_joined(out, row, " | ", " |");
    }
  }

 private:
  static void write_joined(std::ofstream& out,
                           const std::vector<std::string>& fields,
                           const char* sep, const char* tail = "") {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      out << fields[i];
      if (i + 1 < fields.size()) out << sep;
    }
    out << tail << "\n";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_table(const Table& t, const std::filesystem::path& dir,
                 const std::string& base, const std::string& format) {
  if (format == "csv" || format == "both") t.write_csv(dir / (base + ".csv"));
  if (format == "md" || format == "both") {
    t.write_markdown(dir / (base + ".md"));
  }
}

Table summary_table(const std::vector<SummaryRow>& summaries,
                    const std::vector<std::string>& metrics,
                    bool with_failure_rates, bool with_dz) {
  std::vector<std::string> header = {"system", "method", "budget", "n"};
  for (const auto& m : metrics) {
    header.push_back(m);
    header.push_back(m + "_ci_lo");
    header.push_back(m + "_ci_hi");
  }
  if (with_failure_rates) {
    header.push_back("prediction_failure_rate");
    header.push_back("control_failure_rate");
  }
  if (with_dz) {
    header.push_back("dz_open_loop_vs_IGPE");
    header.push_back("dz_tracking_vs_IGPE");
  }
  Table t(header);
  for (const auto& s : summaries) {
    std::vector<std::string> row = {s.system, s.method,
                                    std::to_string(s.budget),
                                    std::to_string(s.n)};
    for (const auto& m : metrics) {
      row.push_back(format_double(s.mean.at(m)));
      row.push_back(format_double(s.ci_lo.at(m)));
      row.push_back(format_double(s.ci_hi.at(m)));
    }
    if (with_failure_rates) {
      row.push_back(format_double(s.prediction_failure_rate));
      row.push_back(format_double(s.control_failure_rate));
    }
    if (with_dz) {
      auto dz_of = [&](const char* m) {
        const auto it = s.dz.find(m);
        return it == s.dz.end() ? std::string("") : format_double(it->second);
      };
      row.push_back(dz_of("open_loop_rmse"));
      row.push_back(dz_of("tracking_rmse"));
    }
    t.add_row(std::move(row));
  }
  return t;
}

Table cases_table(const std::vector<CaseResult>& rows) {
  std::vector<std::string> header = {"system", "method", "seed",
                                     "budget", "degree", "n_samples"};
  for (const auto& m : metric_names()) header.push_back(m);
  header.push_back("prediction_failed");
  header.push_back("control_failed");
  header.push_back("wall_clock_s");
  Table t(header);
  for (const auto& r : rows) {
    if (!r.ok) continue;
    std::vector<std::string> row = {
        r.system,
        r.method,
        std::to_string(r.seed),
        std::to_string(r.budget),
        std::to_string(r.degree),
        std::to_string(r.n_samples)};
    for (const auto& m : metric_names()) {
      row.push_back(format_double(metric_value(r, m)));
    }
    row.push_back(r.prediction_failed ? "1" : "0");
    row.push_back(r.control_failed ? "1" : "0");
    row.push_back(format_double(r.wall_clock_s));
    t.add_row(std::move(row));
  }
  return t;
}

Table per_case_table(const std::vector<CaseResult>& rows,
                     const std::vector<std::string>& metrics) {
  std::vector<std::string> header = {"system", "method", "seed", "budget"};
  for (const auto& m : metrics) header.push_back(m);
  Table t(header);
  for (const auto& r : rows) {
    if (!r.ok) continue;
    std::vector<std::string> row = {r.system, r.method,
                                    std::to_string(r.seed),
                                    std::to_string(r.budget)};
    for (const auto& m : metrics) {
      row.push_back(format_double(metric_value(r, m)));
    }
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace

void emit_tables(const std::vector<CaseResult>& rows,
                 const ExperimentPreset& preset, const HarnessConfig& cfg,
                 const std::filesystem::path& output_dir,
                 const std::string& format) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path tables = output_dir / "tables";
  const fs::path figures = output_dir / "figures";
  fs::create_directories(tables, ec);
  fs::create_directories(figures, ec);
  if (!fs::exists(tables) || !fs::exists(figures)) {
    throw std::runtime_error("emit_tables: cannot create " +
                             output_dir.string());
  }

  const auto summaries = summarize(rows, cfg.n_boot, cfg.boot_seed);

  write_table(cases_table(rows), tables, "cases", format);
  write_table(summary_table(summaries, metric_names(), true, true), tables,
              "table1_summary", format);
  {
    Table t({"metric", "n_rows", "n_nan", "n_nonfinite", "n_failures"});
    for (const auto& q : quality_checks(rows)) {
      t.add_row({q.metric, std::to_string(q.n_rows), std::to_string(q.n_nan),
                 std::to_string(q.n_nonfinite), std::to_string(q.n_failures)});
    }
    write_table(t, tables, "table5_quality_checks", format);
  }

  const bool budget_ablation = preset.name == "major-budget-ablation";
  const bool revision = preset.name == "major-revision";

  if (preset.name != "weight-sensitivity") {
    write_table(summary_table(summaries,
                              {"state_iso", "lift_iso", "regression_iso",
                               "active_rank", "active_dim"},
                              false, false),
                tables, "table6_v4_certificate_hierarchy", format);
  }
  if (revision) {
    write_table(summary_table(summaries,
                              {"std_gpe_index", "regression_iso",
                               "one_step_lift_rmse", "open_loop_rmse",
                               "tracking_rmse"},
                              false, false),
                tables, "table7_v4_external_baselines", format);
  }
  if (budget_ablation || preset.name == "component-ablation") {
    write_table(summary_table(summaries, {"open_loop_rmse", "tracking_rmse"},
                              true, true),
                tables, "table8_v4_downstream_tasks", format);
  }
  if (preset.name == "weight-sensitivity") {
    write_table(summary_table(summaries,
                              {"regression_iso", "one_step_lift_rmse",
                               "open_loop_rmse", "tracking_rmse"},
                              false, false),
                tables, "table9_v4_weight_sensitivity", format);
  }

  // Figure data (csv only; rendering happens elsewhere).
  if (budget_ablation) {
    Table t = summary_table(summaries,
                            {"state_iso", "lift_iso", "regression_iso",
                             "std_gpe_index", "open_loop_rmse"},
                            false, false);
    t.write_csv(figures / "figure6_budget_sensitivity.csv");
  }
  if (budget_ablation || revision) {
    per_case_table(rows, {"state_iso", "lift_iso", "regression_iso"})
        .write_csv(figures / "figure9_certificate_hierarchy.csv");
    per_case_table(rows,
                   {"regression_cov_z_min", "sigma_min_bar_phi",
                    "regression_logdet", "active_rank", "one_step_lift_rmse",
                    "one_step_state_rmse"})
        .write_csv(figures / "figure10_regression_theory_validation.csv");
  }
  if (budget_ablation) {
    per_case_table(rows,
                   {"regression_iso", "open_loop_rmse", "tracking_rmse"})
        .write_csv(figures / "figure11_task_nonmonotonicity.csv");
  }
  {
    // Identity sanity data: sigma_min from the SVD route next to
    // sqrt(N * C_reg) from the eigenvalue route.
    Table t({"system", "method", "seed", "budget", "n_samples",
             "sigma_min_bar_phi", "sqrt_n_creg"});
    for (const auto& r : rows) {
      if (!r.ok) continue;
      t.add_row({r.system, r.method, std::to_string(r.seed),
                 std::to_string(r.budget), std::to_string(r.n_samples),
                 format_double(r.sigma_min_bar_phi),
                 format_double(std::sqrt(r.n_samples *
                                         r.regression_cov_z_min))});
    }
    t.write_csv(figures / "figureA1_creg_sigma_min_sanity.csv");
  }

  // Failed cases, if any, go to a side file for diagnosis.
  std::vector<const CaseResult*> failed;
  for (const auto& r : rows) {
    if (!r.ok) failed.push_back(&r);
  }
  if (!failed.empty()) {
    Table t({"system", "method", "seed", "budget", "error"});
    for (const CaseResult* r : failed) {
      t.add_row({r->system, r->method, std::to_string(r->seed),
                 std::to_string(r->budget), r->error});
    }
    t.write_csv(tables / "failed_cases.csv");
  }
}

}  // namespace koopcert
