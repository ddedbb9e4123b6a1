#pragma once

#include <optional>
#include <string>
#include <vector>

#include "enrich/trial/engine.hpp"

namespace enrich::study {

struct ScenarioSpec {
  std::string name;
  sim::Scenario scenario;
  trial::DesignInputs design;
  // True-null flags per hypothesis (S1, S2, F) from the generating effects;
  // used for familywise error accounting.
  bool null_s1 = true, null_s2 = true, null_full = true;

  void derive_null_flags();
};

struct StudyConfig {
  std::vector<ScenarioSpec> scenarios;
  std::vector<fit::Method> methods;
  long rep_begin = 0;
  long rep_end = 2000;  // exclusive; replicate index doubles as stream id
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = all available
  bool analytic_z = false;
  design::ThetaConfig analytic_theta;  // statistic means in analytic mode
};

// One replicate of one method, flattened for the outcome file. Aggregation
// always walks rows in (replicate, method) order so sharded runs merge to
// the monolithic result exactly.
struct OutcomeRow {
  long replicate = 0;
  fit::Method method = fit::Method::cox;
  trial::Selection selected = trial::Selection::none;
  int stage = 1;
  trial::Decision decision = trial::Decision::accept;
  bool valid = false;
  bool shortfall = false;
  double z1_1 = 0, z2_1 = 0, zF_1 = 0, z_sel_2 = 0;
  double d1_1 = 0, d2_1 = 0, dF_1 = 0, d_2 = 0;
  double cal_1 = 0, cal_2 = 0;
  double visits = 0;
};

struct CellReport {
  std::string scenario;
  fit::Method method = fit::Method::cox;
  long n_total = 0, n_valid = 0, n_invalid = 0, n_shortfall = 0;
  double p_select[4] = {0, 0, 0, 0};  // S1, S2, F, none
  double power_joint = 0.0;   // P(select S1 and reject H01)
  double power_cond = 0.0;    // P(reject H01 | S1 selected)
  double reject_any = 0.0;
  double fwer = 0.0;          // true-null rejections
  double invalid_rate = 0.0;
  double mean_events = 0.0, mean_calendar = 0.0, mean_visits = 0.0;
  double se_power_joint = 0.0, se_power_cond = 0.0, se_fwer = 0.0;
  double se_select[4] = {0, 0, 0, 0};
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<OutcomeRow> rows;  // sorted by (replicate, method)
};

struct StudyResult {
  StudyConfig config;
  std::vector<ScenarioResult> scenarios;
  std::vector<CellReport> report;
  std::vector<std::string> notes;  // skipped scenarios etc.
};

// Monte Carlo study over the scenario grid. Replicates run in parallel with
// OpenMP when jobs != 1; rows land in preallocated slots so the output is
// identical to the serial reference for any job count.
StudyResult run_study(const StudyConfig& config);

// Serial reference implementation kept alongside the parallel path; the
// equality of the two is part of the test suite.
StudyResult run_study_serial(StudyConfig config);

// Aggregates rows in canonical order; exposed so merged shards reproduce the
// monolithic report exactly.
CellReport aggregate_rows(const ScenarioSpec& spec, fit::Method method,
                          const std::vector<OutcomeRow>& rows);

// Design-level strong-control scan: for each effect configuration with at
// least one true null hypothesis, estimates the probability of rejecting a
// true null and compares it with the global-null cell.
struct ScanCell {
  double theta1 = 0, theta2 = 0, theta_full = 0;
  bool null_s1 = true, null_s2 = true, null_full = true;
  long n = 0;
  double reject_true = 0.0, se = 0.0;
};

struct ScanResult {
  std::vector<ScanCell> cells;
  double global_null_rate = 0.0, global_null_se = 0.0;
};

ScanResult fwer_strong_control_scan(const trial::DesignInputs& design,
                                    const std::vector<design::ThetaConfig>& grid,
                                    long replicates, std::uint64_t seed, int jobs = 0);

// Scenario helpers for the standard parameter grid.
ScenarioSpec make_scenario(const std::string& name, double gamma, double sigma,
                           double phi2, bool alternative,
                           const trial::DesignInputs& design);

// Event targets for the standard (gamma, sigma, phi2) grid; nullopt off-grid.
std::optional<std::pair<long, long>> builtin_event_targets(double gamma, double sigma,
                                                           double phi2);

// Completes design inputs from fixed event targets under the equal-m
// convention (m = d1 / required stage-1 information).
trial::DesignInputs design_from_event_targets(const design::DesignSpec& spec, long d1,
                                              long d_total);

}  // namespace enrich::study
