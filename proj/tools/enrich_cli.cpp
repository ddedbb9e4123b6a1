// Command-line front end: wires JSON run configurations to the design,
// simulation, and study pipelines. Exit codes: 0 success, 2 configuration
// error, 3 numeric failure, 4 partial scenario failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>

#include "enrich/design/boundaries.hpp"
#include "enrich/design/events.hpp"
#include "enrich/design/selection.hpp"
#include "enrich/study/report.hpp"
#include "enrich/study/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace enrich;

namespace {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct partial_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path, std::string* raw_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw_out) *raw_out = raw;
  json cfg;
  try {
    cfg = json::parse(raw);
  } catch (const std::exception& ex) {
    throw config_error(std::string("config parse error: ") + ex.what());
  }
  if (!cfg.is_object()) throw config_error("config root must be an object");
  return cfg;
}

void require_keys_known(const json& obj, const std::set<std::string>& allowed,
                        const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw config_error("unknown key '" + it.key() + "' in " + where);
  }
}

double num(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw config_error("key '" + key + "' must be a number");
  return obj[key].get<double>();
}

long integer(const json& obj, const std::string& key, long fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw config_error("key '" + key + "' must be an integer");
  return obj[key].get<long>();
}

bool boolean(const json& obj, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw config_error("key '" + key + "' must be a boolean");
  return obj[key].get<bool>();
}

fit::Method parse_method(const std::string& name) {
  if (name == "cond_score") return fit::Method::cond_score;
  if (name == "cox") return fit::Method::cox;
  if (name == "cox_tvc") return fit::Method::cox_tvc;
  if (name == "rmst") return fit::Method::rmst;
  throw config_error("unknown method '" + name + "'");
}

std::vector<fit::Method> parse_methods(const json& cfg, const std::string& cli_list) {
  std::vector<std::string> names;
  if (!cli_list.empty()) {
    std::string cur;
    for (char ch : cli_list + ",") {
      if (ch == ',') {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
  } else if (cfg.contains("methods")) {
    if (!cfg["methods"].is_array()) throw config_error("'methods' must be an array");
    for (const auto& m : cfg["methods"]) names.push_back(m.get<std::string>());
  } else {
    names = {"cond_score", "cox", "cox_tvc", "rmst"};
  }
  std::vector<fit::Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  if (names.empty()) throw config_error("empty method list");
  return out;
}

design::DesignSpec spec_from_config(const json& cfg) {
  design::DesignSpec spec;
  spec.psi = num(cfg, "psi", spec.psi);
  spec.delta = num(cfg, "delta", spec.delta);
  spec.lambda = num(cfg, "lambda", spec.lambda);
  spec.alpha = num(cfg, "alpha", spec.alpha);
  spec.beta = num(cfg, "beta", spec.beta);
  const auto cal = design::calibrate_threshold(spec.psi, spec.delta);
  spec.zeta = cal.zeta;
  spec.info1_req = cal.info1_req;
  return spec;
}

const std::set<std::string> kScenarioKeys = {"name",   "gamma",       "sigma",
                                             "phi2",   "alternative", "d1_stage1",
                                             "d_total"};

sim::Scenario scenario_from_json(const json& sc, long n_max, double accrual_rate) {
  require_keys_known(sc, kScenarioKeys, "scenario");
  sim::Scenario scen = boolean(sc, "alternative", true) ? sim::Scenario::alternative()
                                                        : sim::Scenario::global_null();
  const double gamma = num(sc, "gamma", 0.8);
  const double sigma = num(sc, "sigma", 1.0);
  const double phi2 = num(sc, "phi2", 5.0);
  for (int g = 0; g < 2; ++g) {
    scen.params.group[g].gamma = gamma;
    scen.params.group[g].sigma2 = sigma * sigma;
    scen.params.group[g].phi2 = phi2;
  }
  scen.n_max = static_cast<int>(n_max);
  scen.accrual_rate = accrual_rate;
  return scen;
}

trial::DesignInputs design_for_scenario(const json& sc, const design::DesignSpec& spec,
                                        const std::optional<study::DesignReport>& report) {
  if (report) {
    trial::DesignInputs inputs;
    inputs.spec = report->spec;
    inputs.plan = report->plan;
    return inputs;
  }
  long d1 = integer(sc, "d1_stage1", 0);
  long d2 = integer(sc, "d_total", 0);
  if (d1 <= 0 || d2 <= 0) {
    const auto hit = study::builtin_event_targets(num(sc, "gamma", 0.8),
                                                  num(sc, "sigma", 1.0),
                                                  num(sc, "phi2", 5.0));
    if (!hit)
      throw config_error(
          "scenario lacks d1_stage1/d_total and is off the built-in grid");
    d1 = hit->first;
    d2 = hit->second;
  }
  return study::design_from_event_targets(spec, d1, d2);
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string methods;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long replicates = 0;
  int jobs = 0;
  bool analytic_z = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "JSON run configuration");
  if (needs_config) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "base seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--replicates", opts.replicates, "replicates (overrides config)");
  cmd->add_option("--jobs", opts.jobs, "parallel workers (0 = all)");
  cmd->add_option("--methods", opts.methods, "comma-separated method list");
  cmd->add_flag("--analytic-z", opts.analytic_z,
                "design-oracle mode: exact statistics instead of fitted data");
}

std::uint64_t effective_seed(const CommonOpts& opts, const json& cfg) {
  if (opts.seed_set) return opts.seed;
  return static_cast<std::uint64_t>(integer(cfg, "seed", 1));
}

int run_calibrate(const CommonOpts& opts) {
  std::string raw;
  const json cfg = load_config(opts.config_path, &raw);
  require_keys_known(cfg,
                     {"psi", "delta", "lambda", "alpha", "beta", "seed", "method",
                      "calibration_patients", "calibration_snapshots", "scenario"},
                     "calibrate config");
  const auto spec = spec_from_config(cfg);

  design::MCalibrationConfig mc;
  mc.seed = effective_seed(opts, cfg);
  mc.n_patients = static_cast<int>(integer(cfg, "calibration_patients", 5000));
  mc.max_snapshots = static_cast<int>(integer(cfg, "calibration_snapshots", 24));
  mc.method = cfg.contains("method") ? parse_method(cfg["method"].get<std::string>())
                                     : fit::Method::cond_score;
  if (cfg.contains("scenario"))
    mc.scenario = scenario_from_json(cfg["scenario"], 5000, 1e9);
  else
    mc.scenario = sim::Scenario::alternative();
  mc.scenario.params.lambda = spec.lambda;

  study::DesignReport report;
  report.spec = spec;
  report.plan = design::calibrate_m(mc);
  design::plan_events(spec, report.plan);
  report.plan.i_max = design::find_imax(spec, report.plan);
  design::finalize_events(report.plan);
  const auto seq = design::planned_sequences(report.plan, spec.lambda, report.plan.i_max);
  report.planned_boundaries =
      design::solve_boundaries(spec, seq.stage1, seq.stage2, report.plan.i_max, true);

  fs::create_directories(opts.out_dir);
  const auto path = (fs::path(opts.out_dir) / "design.txt").string();
  study::write_design_report(path, report,
                             study::manifest_line(mc.seed, study::config_hash(raw)));
  std::cout << "wrote " << path << "\n";
  return 0;
}

study::StudyConfig study_config_from(const json& cfg, const CommonOpts& opts,
                                     bool analytic_default) {
  study::StudyConfig sc;
  sc.seed = effective_seed(opts, cfg);
  sc.jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(integer(cfg, "jobs", 0));
  sc.analytic_z = opts.analytic_z || boolean(cfg, "analytic_z", analytic_default);
  const long reps =
      opts.replicates > 0 ? opts.replicates : integer(cfg, "replicates", 2000);
  sc.rep_begin = integer(cfg, "rep_begin", 0);
  sc.rep_end = integer(cfg, "rep_end", sc.rep_begin + reps);
  if (sc.rep_end <= sc.rep_begin) throw config_error("empty replicate range");
  sc.methods = parse_methods(cfg, opts.methods);
  return sc;
}

int run_simulate(const CommonOpts& opts) {
  std::string raw;
  const json cfg = load_config(opts.config_path, &raw);
  require_keys_known(cfg,
                     {"scenario", "design_report", "replicates", "seed", "methods",
                      "jobs", "analytic_z", "rep_begin", "rep_end", "n_max",
                      "accrual_rate", "psi", "delta", "lambda", "alpha", "beta",
                      "theta1", "theta2"},
                     "simulate config");
  if (!cfg.contains("scenario")) throw config_error("simulate config needs 'scenario'");

  std::optional<study::DesignReport> report;
  if (cfg.contains("design_report"))
    report = study::read_design_report(cfg["design_report"].get<std::string>());
  const auto spec = report ? report->spec : spec_from_config(cfg);

  study::StudyConfig sc = study_config_from(cfg, opts, false);
  study::ScenarioSpec scen;
  scen.name = cfg["scenario"].contains("name")
                  ? cfg["scenario"]["name"].get<std::string>()
                  : "scenario";
  scen.scenario = scenario_from_json(cfg["scenario"], integer(cfg, "n_max", 400),
                                     num(cfg, "accrual_rate", 200.0));
  scen.scenario.params.lambda = spec.lambda;
  scen.design = design_for_scenario(cfg["scenario"], spec, report);
  scen.derive_null_flags();
  sc.scenarios.push_back(scen);
  sc.analytic_theta = {num(cfg, "theta1", 0.0), num(cfg, "theta2", 0.0)};

  const auto result = study::run_study(sc);
  if (result.scenarios.empty())
    throw partial_failure("scenario skipped: " +
                          (result.notes.empty() ? "unknown" : result.notes[0]));
  fs::create_directories(opts.out_dir);
  const auto manifest = study::manifest_line(sc.seed, study::config_hash(raw));
  const auto opath = (fs::path(opts.out_dir) / "outcomes.csv").string();
  study::write_outcomes_csv(opath, result.scenarios[0], manifest);
  const auto rpath = (fs::path(opts.out_dir) / "report.csv").string();
  study::write_report_csv(rpath, result, manifest);
  std::cout << "wrote " << opath << "\n";
  return 0;
}

int run_study_cmd(const CommonOpts& opts) {
  std::string raw;
  const json cfg = load_config(opts.config_path, &raw);
  require_keys_known(cfg,
                     {"scenarios", "replicates", "seed", "methods", "jobs",
                      "analytic_z", "rep_begin", "rep_end", "n_max", "accrual_rate",
                      "psi", "delta", "lambda", "alpha", "beta"},
                     "study config");
  if (!cfg.contains("scenarios") || !cfg["scenarios"].is_array() ||
      cfg["scenarios"].empty())
    throw config_error("study config needs a non-empty 'scenarios' array");
  const auto spec = spec_from_config(cfg);
  study::StudyConfig sc = study_config_from(cfg, opts, false);
  int idx = 0;
  for (const auto& scj : cfg["scenarios"]) {
    study::ScenarioSpec scen;
    scen.name = scj.contains("name") ? scj["name"].get<std::string>()
                                     : ("scenario" + std::to_string(idx));
    scen.scenario = scenario_from_json(scj, integer(cfg, "n_max", 400),
                                       num(cfg, "accrual_rate", 200.0));
    scen.scenario.params.lambda = spec.lambda;
    scen.design = design_for_scenario(scj, spec, std::nullopt);
    scen.derive_null_flags();
    sc.scenarios.push_back(scen);
    ++idx;
  }

  const auto result = study::run_study(sc);
  fs::create_directories(opts.out_dir);
  const auto manifest = study::manifest_line(sc.seed, study::config_hash(raw));
  for (const auto& srow : result.scenarios) {
    const auto opath =
        (fs::path(opts.out_dir) / ("outcomes_" + srow.spec.name + ".csv")).string();
    study::write_outcomes_csv(opath, srow, manifest);
  }
  study::write_report_csv((fs::path(opts.out_dir) / "report.csv").string(), result,
                          manifest);
  study::write_plotdata_csv((fs::path(opts.out_dir) / "plotdata.csv").string(), result,
                            manifest);
  study::write_summary_txt((fs::path(opts.out_dir) / "summary.txt").string(), result);
  std::cout << "wrote report for " << result.scenarios.size() << " scenario(s)\n";
  if (!result.notes.empty()) {
    for (const auto& n : result.notes) std::cerr << "note: " << n << "\n";
    throw partial_failure("some scenarios were skipped");
  }
  return 0;
}

int run_fwer_scan(const CommonOpts& opts) {
  std::string raw;
  const json cfg = load_config(opts.config_path, &raw);
  require_keys_known(cfg,
                     {"theta_grid", "design_report", "replicates", "seed", "jobs",
                      "psi", "delta", "lambda", "alpha", "beta", "d1_stage1",
                      "d_total"},
                     "fwer-scan config");
  std::optional<study::DesignReport> report;
  if (cfg.contains("design_report"))
    report = study::read_design_report(cfg["design_report"].get<std::string>());
  const auto spec = report ? report->spec : spec_from_config(cfg);
  trial::DesignInputs inputs;
  if (report) {
    inputs.spec = report->spec;
    inputs.plan = report->plan;
  } else {
    const long d1 = integer(cfg, "d1_stage1", 41);
    const long d2 = integer(cfg, "d_total", 191);
    inputs = study::design_from_event_targets(spec, d1, d2);
  }

  std::vector<design::ThetaConfig> grid;
  if (cfg.contains("theta_grid")) {
    for (const auto& pair : cfg["theta_grid"]) {
      if (!pair.is_array() || pair.size() != 2)
        throw config_error("theta_grid entries must be [theta1, theta2] pairs");
      grid.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
  } else {
    for (double t1 : {-0.5, 0.0, 0.5})
      for (double t2 : {-0.5, 0.0, 0.5})
        if (t1 <= 0.0 || t2 <= 0.0) grid.push_back({t1, t2});
  }
  const long reps = opts.replicates > 0 ? opts.replicates : integer(cfg, "replicates", 10000);
  const auto seed = effective_seed(opts, cfg);
  const auto scan = study::fwer_strong_control_scan(inputs, grid, reps, seed,
                                                    opts.jobs);
  fs::create_directories(opts.out_dir);
  const auto path = (fs::path(opts.out_dir) / "fwer_scan.csv").string();
  study::write_scan_csv(path, scan, study::manifest_line(seed, study::config_hash(raw)));
  std::cout << "wrote " << path << "\n";
  return 0;
}

int run_report(const CommonOpts& opts) {
  std::string raw;
  const json cfg = load_config(opts.config_path, &raw);
  require_keys_known(cfg, {"inputs", "scenario", "seed", "psi", "delta", "lambda",
                           "alpha", "beta", "name"},
                     "report config");
  if (!cfg.contains("inputs") || !cfg["inputs"].is_array() || cfg["inputs"].empty())
    throw config_error("report config needs a non-empty 'inputs' array");
  std::vector<study::OutcomeRow> rows;
  for (const auto& p : cfg["inputs"]) {
    const auto part = study::read_outcomes_csv(p.get<std::string>());
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.replicate != b.replicate) return a.replicate < b.replicate;
    return static_cast<int>(a.method) < static_cast<int>(b.method);
  });

  const auto spec = spec_from_config(cfg);
  study::ScenarioSpec scen;
  scen.name = cfg.contains("name") ? cfg["name"].get<std::string>() : "merged";
  if (cfg.contains("scenario"))
    scen.scenario = scenario_from_json(cfg["scenario"], 400, 200.0);
  scen.design = study::design_from_event_targets(spec, 41, 191);
  scen.derive_null_flags();

  std::set<int> methods_seen;
  for (const auto& r : rows) methods_seen.insert(static_cast<int>(r.method));
  study::StudyResult result;
  study::ScenarioResult sr;
  sr.spec = scen;
  sr.rows = rows;
  for (int m : methods_seen)
    result.report.push_back(
        study::aggregate_rows(scen, static_cast<fit::Method>(m), rows));
  result.scenarios.push_back(std::move(sr));

  fs::create_directories(opts.out_dir);
  const auto manifest =
      study::manifest_line(effective_seed(opts, cfg), study::config_hash(raw));
  study::write_outcomes_csv((fs::path(opts.out_dir) / "outcomes_merged.csv").string(),
                            result.scenarios[0], manifest);
  study::write_report_csv((fs::path(opts.out_dir) / "report.csv").string(), result,
                          manifest);
  std::cout << "merged " << rows.size() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive enrichment trial design and simulation"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* calibrate = app.add_subcommand(
      "calibrate", "threshold + events-per-information calibration and events plan");
  add_common(calibrate, opts);
  auto* simulate = app.add_subcommand("simulate", "run trials, write per-trial outcomes");
  add_common(simulate, opts);
  auto* study_cmd = app.add_subcommand("study", "scenario-grid power study");
  add_common(study_cmd, opts);
  auto* scan = app.add_subcommand("fwer-scan", "strong-control scan over effect pairs");
  add_common(scan, opts);
  auto* report = app.add_subcommand("report", "merge sharded outcome files and re-report");
  add_common(report, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return run_calibrate(opts);
    if (simulate->parsed()) return run_simulate(opts);
    if (study_cmd->parsed()) return run_study_cmd(opts);
    if (scan->parsed()) return run_fwer_scan(opts);
    if (report->parsed()) return run_report(opts);
  } catch (const config_error& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const partial_failure& ex) {
    std::cerr << "partial failure: " << ex.what() << "\n";
    return 4;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  }
  return 0;
}
