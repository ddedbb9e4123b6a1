#include "enrich/study/study.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "enrich/design/selection.hpp"

namespace enrich::study {

using trial::Selection;

void ScenarioSpec::derive_null_flags() {
  const auto& g = scenario.params.group;
  auto benefits = [](const sim::GroupParams& p) {
    return p.eta < 0.0 || (p.gamma != 0.0 && p.b2 * p.gamma < 0.0);
  };
  null_s1 = !benefits(g[0]);
  null_s2 = !benefits(g[1]);
  null_full = null_s1 && null_s2;
}

namespace {

bool rejected(const OutcomeRow& r) {
  return r.decision == trial::Decision::reject_selected ||
         r.decision == trial::Decision::efficacy_stop_stage1;
}

bool rejects_true_null(const OutcomeRow& r, const ScenarioSpec& spec) {
  if (!rejected(r)) return false;
  switch (r.selected) {
    case Selection::s1: return spec.null_s1;
    case Selection::s2: return spec.null_s2;
    case Selection::full: return spec.null_full;
    default: return false;
  }
}

OutcomeRow row_from_outcome(long replicate, fit::Method method,
                            const trial::TrialOutcome& t) {
  OutcomeRow r;
  r.replicate = replicate;
  r.method = method;
  r.selected = t.selected;
  r.stage = t.stage_stopped;
  r.decision = t.decision;
  r.valid = t.valid;
  r.shortfall = t.shortfall;
  r.z1_1 = t.z1_stage1;
  r.z2_1 = t.z2_stage1;
  r.zF_1 = t.zF_stage1;
  r.z_sel_2 = t.z_selected_stage2;
  r.d1_1 = t.info.get(design::Group::s1, 1).events;
  r.d2_1 = t.info.get(design::Group::s2, 1).events;
  r.dF_1 = t.info.get(design::Group::full, 1).events;
  r.d_2 = t.stage_stopped == 2 ? t.info.get(design::Group::full, 2).events : 0.0;
  r.cal_1 = t.calendar_stage1;
  r.cal_2 = t.calendar_stage2;
  r.visits = t.visits_per_patient;
  return r;
}

OutcomeRow row_from_analytic(long replicate, const trial::AnalyticOutcome& a) {
  OutcomeRow r;
  r.replicate = replicate;
  r.method = fit::Method::cox;  // placeholder label for the design oracle
  r.selected = a.selected;
  r.stage = a.stage_stopped;
  r.valid = true;
  if (a.selected == Selection::none) {
    r.decision = trial::Decision::futility_stop_stage1;
  } else if (a.rejected) {
    r.decision = a.stage_stopped == 1 ? trial::Decision::efficacy_stop_stage1
                                      : trial::Decision::reject_selected;
  } else {
    r.decision = trial::Decision::accept;
  }
  return r;
}

void run_scenario(const StudyConfig& config, const ScenarioSpec& spec,
                  ScenarioResult& out, int jobs) {
  const long n_reps = config.rep_end - config.rep_begin;
  const long n_methods = config.analytic_z ? 1 : static_cast<long>(config.methods.size());
  out.spec = spec;
  out.rows.assign(static_cast<size_t>(n_reps * n_methods), OutcomeRow{});

  if (config.analytic_z) {
    const auto des = trial::make_analytic_design(spec.design);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(jobs)
#endif
    for (long i = 0; i < n_reps; ++i) {
      const long rep = config.rep_begin + i;
      math::RngStream rng(config.seed, static_cast<std::uint64_t>(rep));
      out.rows[static_cast<size_t>(i)] =
          row_from_analytic(rep, trial::run_trial_analytic(des, config.analytic_theta, rng));
    }
    return;
  }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
#endif
  for (long i = 0; i < n_reps; ++i) {
    const long rep = config.rep_begin + i;
    // One dataset per replicate, shared by every method.
    const auto dataset = sim::simulate_population(spec.scenario, config.seed,
                                                  static_cast<std::uint64_t>(rep));
    for (long mi = 0; mi < n_methods; ++mi) {
      const auto outcome = trial::run_trial_on(dataset, spec.design, config.methods[mi]);
      out.rows[static_cast<size_t>(i * n_methods + mi)] =
          row_from_outcome(rep, config.methods[mi], outcome);
    }
  }
}

int resolve_jobs(int jobs) {
#ifdef _OPENMP
  return jobs > 0 ? jobs : omp_get_max_threads();
#else
  (void)jobs;
  return 1;
#endif
}

}  // namespace

CellReport aggregate_rows(const ScenarioSpec& spec, fit::Method method,
                          const std::vector<OutcomeRow>& rows) {
  CellReport c;
  c.scenario = spec.name;
  c.method = method;
  long sel[4] = {0, 0, 0, 0};
  long rej_s1 = 0, rej_any = 0, rej_true = 0;
  double sum_events = 0, sum_cal = 0, sum_visits = 0;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    ++c.n_total;
    if (r.shortfall) ++c.n_shortfall;
    if (!r.valid) {
      ++c.n_invalid;
      continue;
    }
    ++c.n_valid;
    ++sel[static_cast<int>(r.selected)];
    if (rejected(r)) {
      ++rej_any;
      if (r.selected == Selection::s1) ++rej_s1;
      if (rejects_true_null(r, spec)) ++rej_true;
    }
    sum_events += r.stage == 2 ? r.d_2 : r.dF_1;
    sum_cal += r.stage == 2 ? r.cal_2 : r.cal_1;
    sum_visits += r.visits;
  }
  const double n = std::max(1L, c.n_valid);
  for (int i = 0; i < 4; ++i) {
    c.p_select[i] = sel[i] / n;
    c.se_select[i] = std::sqrt(c.p_select[i] * (1.0 - c.p_select[i]) / n);
  }
  c.power_joint = rej_s1 / n;
  c.se_power_joint = std::sqrt(c.power_joint * (1.0 - c.power_joint) / n);
  const double n_sel1 = std::max(1L, sel[0]);
  c.power_cond = rej_s1 / n_sel1;
  c.se_power_cond = std::sqrt(c.power_cond * (1.0 - c.power_cond) / n_sel1);
  c.reject_any = rej_any / n;
  c.fwer = rej_true / n;
  c.se_fwer = std::sqrt(c.fwer * (1.0 - c.fwer) / n);
  c.invalid_rate = c.n_total > 0 ? static_cast<double>(c.n_invalid) / c.n_total : 0.0;
  c.mean_events = sum_events / n;
  c.mean_calendar = sum_cal / n;
  c.mean_visits = sum_visits / n;
  return c;
}

StudyResult run_study(const StudyConfig& config) {
  StudyResult result;
  result.config = config;
  const int jobs = resolve_jobs(config.jobs);
  for (const auto& spec_in : config.scenarios) {
    ScenarioSpec spec = spec_in;
    spec.derive_null_flags();
    try {
      spec.scenario.params.validate();
      spec.design.validate();
    } catch (const std::exception& ex) {
      result.notes.push_back("scenario '" + spec.name + "' skipped: " + ex.what());
      continue;
    }
    ScenarioResult sr;
    run_scenario(config, spec, sr, jobs);
    std::sort(sr.rows.begin(), sr.rows.end(), [](const OutcomeRow& a, const OutcomeRow& b) {
      if (a.replicate != b.replicate) return a.replicate < b.replicate;
      return static_cast<int>(a.method) < static_cast<int>(b.method);
    });
    if (config.analytic_z) {
      result.report.push_back(aggregate_rows(spec, fit::Method::cox, sr.rows));
    } else {
      for (auto m : config.methods)
        result.report.push_back(aggregate_rows(spec, m, sr.rows));
    }
    result.scenarios.push_back(std::move(sr));
  }
  return result;
}

StudyResult run_study_serial(StudyConfig config) {
  config.jobs = 1;
  return run_study(config);
}

ScanResult fwer_strong_control_scan(const trial::DesignInputs& design,
                                    const std::vector<design::ThetaConfig>& grid,
                                    long replicates, std::uint64_t seed, int jobs) {
  const auto des = trial::make_analytic_design(design);
  const double lambda = design.spec.lambda;
  const int nj = resolve_jobs(jobs);
  ScanResult result;

  auto run_cell = [&](const design::ThetaConfig& theta, bool count_true_nulls) {
    const bool n1 = theta.theta1 <= 0.0;
    const bool n2 = theta.theta2 <= 0.0;
    const bool nf = theta.theta_full(lambda) <= 0.0;
    long hits = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : hits) num_threads(nj)
#endif
    for (long rep = 0; rep < replicates; ++rep) {
      math::RngStream rng(seed, static_cast<std::uint64_t>(rep));
      const auto out = trial::run_trial_analytic(des, theta, rng);
      if (!out.rejected) continue;
      bool true_null = false;
      switch (out.selected) {
        case Selection::s1: true_null = n1; break;
        case Selection::s2: true_null = n2; break;
        case Selection::full: true_null = nf; break;
        default: break;
      }
      if (!count_true_nulls || true_null) ++hits;
    }
    return hits;
  };

  const long null_hits = run_cell(design::ThetaConfig::global_null(), true);
  result.global_null_rate = static_cast<double>(null_hits) / replicates;
  result.global_null_se = std::sqrt(result.global_null_rate *
                                    (1.0 - result.global_null_rate) / replicates);

  for (const auto& theta : grid) {
    ScanCell cell;
    cell.theta1 = theta.theta1;
    cell.theta2 = theta.theta2;
    cell.theta_full = theta.theta_full(lambda);
    cell.null_s1 = theta.theta1 <= 0.0;
    cell.null_s2 = theta.theta2 <= 0.0;
    cell.null_full = cell.theta_full <= 0.0;
    cell.n = replicates;
    const long hits = run_cell(theta, true);
    cell.reject_true = static_cast<double>(hits) / replicates;
    cell.se = std::sqrt(cell.reject_true * (1.0 - cell.reject_true) / replicates);
    result.cells.push_back(cell);
  }
  return result;
}

ScenarioSpec make_scenario(const std::string& name, double gamma, double sigma,
                           double phi2, bool alternative,
                           const trial::DesignInputs& design) {
  ScenarioSpec spec;
  spec.name = name;
  spec.scenario = alternative ? sim::Scenario::alternative() : sim::Scenario::global_null();
  for (int g = 0; g < 2; ++g) {
    spec.scenario.params.group[g].gamma = gamma;
    spec.scenario.params.group[g].sigma2 = sigma * sigma;
    spec.scenario.params.group[g].phi2 = phi2;
  }
  spec.design = design;
  spec.derive_null_flags();
  return spec;
}

std::optional<std::pair<long, long>> builtin_event_targets(double gamma, double sigma,
                                                           double phi2) {
  struct Row {
    double phi2, sigma, gamma;
    long d1, d2;
  };
  // Pre-computed event targets for the standard scenario grid.
  static const Row table[] = {
      {5.0, 0.0, 0.0, 41, 180},  {5.0, 0.0, 0.4, 40, 170},  {5.0, 0.0, 0.8, 42, 170},
      {5.0, 0.0, 1.2, 44, 175},  {5.0, 0.5, 0.0, 41, 178},  {5.0, 0.5, 0.4, 41, 165},
      {5.0, 0.5, 0.8, 43, 175},  {5.0, 0.5, 1.2, 48, 190},  {5.0, 1.0, 0.0, 41, 170},
      {5.0, 1.0, 0.4, 42, 180},  {5.0, 1.0, 0.8, 49, 215},  {5.0, 1.0, 1.2, 62, 271},
      {5.0, 1.5, 0.0, 44, 195},  {5.0, 1.5, 0.4, 49, 190},  {5.0, 1.5, 0.8, 60, 250},
      {5.0, 1.5, 1.2, 80, 350},  {0.0, 1.0, 0.0, 41, 160},  {0.0, 1.0, 0.4, 40, 175},
      {0.0, 1.0, 0.8, 42, 200},  {0.0, 1.0, 1.2, 61, 266},  {2.5, 1.0, 0.0, 41, 165},
      {2.5, 1.0, 0.4, 42, 178},  {2.5, 1.0, 0.8, 50, 195},  {2.5, 1.0, 1.2, 69, 302},
      {7.5, 1.0, 0.0, 41, 180},  {7.5, 1.0, 0.4, 45, 190},  {7.5, 1.0, 0.8, 50, 200},
      {7.5, 1.0, 1.2, 70, 300},
  };
  for (const auto& row : table) {
    if (std::abs(row.phi2 - phi2) < 1e-9 && std::abs(row.sigma - sigma) < 1e-9 &&
        std::abs(row.gamma - gamma) < 1e-9)
      return std::make_pair(row.d1, row.d2);
  }
  return std::nullopt;
}

trial::DesignInputs design_from_event_targets(const design::DesignSpec& spec, long d1,
                                              long d_total) {
  trial::DesignInputs inputs;
  inputs.spec = spec;
  inputs.plan.m1 = d1 / spec.info1_req;
  inputs.plan.m2 = inputs.plan.m1;
  inputs.plan.mF = inputs.plan.m1;
  inputs.plan.d1_stage1 = d1;
  const double lam = spec.lambda;
  inputs.plan.d2_stage1 = static_cast<long>(std::ceil((1.0 - lam) / lam * d1));
  inputs.plan.dF_stage1 = static_cast<long>(std::ceil(d1 / lam));
  inputs.plan.d_total = d_total;
  inputs.plan.i_max = d_total / inputs.plan.mF;
  return inputs;
}

}  // namespace enrich::study
