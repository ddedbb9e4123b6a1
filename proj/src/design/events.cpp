#include "enrich/design/events.hpp"

#include <algorithm>
#include <cmath>

#include "enrich/design/boundaries.hpp"
#include "enrich/fit/engines.hpp"
#include "enrich/fit/rmst.hpp"
#include "enrich/sim/population.hpp"

namespace enrich::design {

namespace {

fit::AnalysisResult run_method(fit::Method method, const sim::GroupSnapshot& snap,
                               Group g) {
  switch (method) {
    case fit::Method::cond_score: return fit::fit_conditional_score(snap, g, 1);
    case fit::Method::cox: return fit::fit_cox(snap, g, 1);
    case fit::Method::cox_tvc: return fit::fit_cox_tvc(snap, g, 1);
    default: return fit::fit_rmst(snap, g, 1);
  }
}

struct SeriesFit {
  double slope = 0.0;  // events per information
  double r2 = 0.0;
  int used = 0;
  int dropped = 0;
};

// Through-origin regression of events on information. R^2 is relative to the
// zero line, the usual no-intercept convention.
SeriesFit fit_series(const std::vector<double>& info, const std::vector<double>& events,
                     int dropped) {
  SeriesFit f;
  f.dropped = dropped;
  f.used = static_cast<int>(info.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < info.size(); ++i) {
    sxy += info[i] * events[i];
    sxx += info[i] * info[i];
    syy += events[i] * events[i];
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  double ssres = 0.0;
  for (size_t i = 0; i < info.size(); ++i) {
    const double r = events[i] - f.slope * info[i];
    ssres += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssres / syy : 0.0;
  return f;
}

}  // namespace

EventsPlan calibrate_m(const MCalibrationConfig& config) {
  sim::Scenario scen = config.scenario;
  scen.n_max = config.n_patients;
  // Everyone enters at time zero: the events-information relation is a
  // property of follow-up depth, not of staggered entry.
  scen.accrual_rate = 1e9;
  sim::TrialDataset data = sim::simulate_population(scen, config.seed, 0);

  const double lambda = scen.params.lambda;
  EventsPlan plan;

  // Event-time grids per population, strided to the snapshot budget.
  for (int gi = 0; gi < 3; ++gi) {
    const auto pop = static_cast<sim::PopulationSel>(gi);
    std::vector<double> event_times;
    for (const auto& s : data.subjects) {
      const bool in = gi == 2 || s.subgroup == gi;
      if (in && !s.event_capped && s.event_time <= s.censor_time)
        event_times.push_back(s.accrual_time + s.event_time);
    }
    std::sort(event_times.begin(), event_times.end());
    const int total = static_cast<int>(event_times.size());
    if (total < config.min_events)
      throw calibration_error("calibrate_m: too few events in the calibration cohort");

    std::vector<double> info_pts, event_pts;
    int dropped = 0;
    const int steps = std::min(config.max_snapshots, total - config.min_events + 1);
    for (int si = 0; si < steps; ++si) {
      const int target = config.min_events +
                         static_cast<int>(std::llround(
                             (total - config.min_events) *
                             (steps == 1 ? 1.0 : static_cast<double>(si) / (steps - 1))));
      const double cut = event_times[target - 1];
      double info = 0.0;
      bool ok = true;
      if (pop == sim::PopulationSel::full) {
        // Full-population information through the lambda combination of the
        // two subgroup analyses, matching how the trial builds Z_F.
        const auto s1 = sim::snapshot_at(data, sim::PopulationSel::s1, cut);
        const auto s2 = sim::snapshot_at(data, sim::PopulationSel::s2, cut);
        const auto r1 = run_method(config.method, s1, Group::s1);
        const auto r2 = run_method(config.method, s2, Group::s2);
        ok = r1.converged && r2.converged;
        if (ok) info = InfoState::combine_full(r1.info, r2.info, lambda);
      } else {
        const auto snap = sim::snapshot_at(data, pop, cut);
        const auto r = run_method(config.method, snap,
                                  gi == 0 ? Group::s1 : Group::s2);
        ok = r.converged;
        if (ok) info = r.info;
      }
      if (!ok || !(info > 0.0)) {
        ++dropped;
        continue;
      }
      info_pts.push_back(info);
      event_pts.push_back(static_cast<double>(target));
    }
    if (info_pts.size() < 3)
      throw calibration_error("calibrate_m: too few usable calibration snapshots");
    const SeriesFit fitted = fit_series(info_pts, event_pts, dropped);
    if (!(fitted.slope > 0.0)) throw calibration_error("calibrate_m: nonpositive slope");
    (gi == 0 ? plan.m1 : gi == 1 ? plan.m2 : plan.mF) = fitted.slope;
    plan.r2[gi] = fitted.r2;
    plan.dropped[gi] = fitted.dropped;
  }
  return plan;
}

namespace {

// Conservative rounding that forgives floating-point dust just above an
// integer.
long ceil_events(double x) { return static_cast<long>(std::ceil(x - 1e-9)); }

}  // namespace

void plan_events(const DesignSpec& spec, EventsPlan& plan) {
  spec.validate();
  if (!(plan.m1 > 0.0 && plan.m2 > 0.0 && plan.mF > 0.0))
    throw std::invalid_argument("plan_events: calibrated m constants required");
  plan.d1_stage1 = ceil_events(spec.info1_req * plan.m1);
  const double lam = spec.lambda;
  plan.d2_stage1 = ceil_events((1.0 - lam) / lam * plan.d1_stage1);
  plan.dF_stage1 = ceil_events(plan.d1_stage1 / lam);
  if (plan.i_max > 0.0) finalize_events(plan);
}

void finalize_events(EventsPlan& plan) {
  if (!(plan.i_max > 0.0)) throw std::invalid_argument("finalize_events: i_max required");
  plan.d_total = ceil_events(plan.i_max * plan.mF);
}

double predict_info(double info_j1, double d_j1, double d_total) {
  if (!(d_j1 > 0.0))
    throw std::invalid_argument("predict_info: zero stage-1 events");
  return info_j1 * d_total / d_j1;
}

}  // namespace enrich::design
