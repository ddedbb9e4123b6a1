#include "enrich/trial/engine.hpp"

#include <cmath>

#include "enrich/fit/engines.hpp"
#include "enrich/fit/rmst.hpp"

namespace enrich::trial {

using design::Group;
using design::InfoState;

Selection select(double z1, double z2, double zeta) {
  const bool s1 = z1 > zeta;
  const bool s2 = z2 > zeta;
  if (s1 && s2) return Selection::full;
  if (s1) return Selection::s1;
  if (s2) return Selection::s2;
  return Selection::none;
}

Verdict decide(double z, double a, double b) {
  if (a > b) throw std::invalid_argument("decide: requires a <= b");
  if (z <= a) return Verdict::futility;
  if (z > b) return Verdict::efficacy;
  return Verdict::continue_trial;
}

namespace {

fit::AnalysisResult fit_group(fit::Method method, const sim::GroupSnapshot& snap,
                              Group g, int analysis, double t_star) {
  switch (method) {
    case fit::Method::cond_score: return fit::fit_conditional_score(snap, g, analysis);
    case fit::Method::cox: return fit::fit_cox(snap, g, analysis);
    case fit::Method::cox_tvc: return fit::fit_cox_tvc(snap, g, analysis);
    default: return fit::fit_rmst(snap, g, analysis, t_star);
  }
}

struct FullCombination {
  double theta, info, z;
};

FullCombination combine_full(const fit::AnalysisResult& r1,
                             const fit::AnalysisResult& r2, double lambda) {
  FullCombination fc;
  fc.theta = lambda * r1.theta_hat + (1.0 - lambda) * r2.theta_hat;
  fc.info = InfoState::combine_full(r1.info, r2.info, lambda);
  fc.z = fc.theta * std::sqrt(fc.info);
  return fc;
}

sim::PopulationSel to_pop(Selection w) { return static_cast<sim::PopulationSel>(w); }

Group to_group(Selection w) { return static_cast<Group>(w); }

}  // namespace

TrialOutcome run_trial_on(const sim::TrialDataset& dataset,
                          const DesignInputs& design, fit::Method method) {
  design.validate();
  const auto& spec = design.spec;
  const double lambda = spec.lambda;
  TrialOutcome out;

  // Stage 1 triggers on the planned S1 event count.
  const auto stage1_time =
      sim::calendar_of_nth_event(dataset, sim::PopulationSel::s1,
                                 static_cast<int>(design.plan.d1_stage1));
  out.calendar_stage1 = stage1_time.calendar_time;
  out.shortfall = stage1_time.shortfall;

  const auto snap1_s1 = sim::snapshot_at(dataset, sim::PopulationSel::s1, out.calendar_stage1);
  const auto snap1_s2 = sim::snapshot_at(dataset, sim::PopulationSel::s2, out.calendar_stage1);
  const auto r1 = fit_group(method, snap1_s1, Group::s1, 1, design.t_star);
  const auto r2 = fit_group(method, snap1_s2, Group::s2, 1, design.t_star);
  if (!r1.converged || !r2.converged) {
    out.note = "stage-1 fit failed: " + (r1.converged ? r2.note : r1.note);
    return out;
  }
  const auto full1 = combine_full(r1, r2, lambda);

  out.z1_stage1 = r1.z;
  out.z2_stage1 = r2.z;
  out.zF_stage1 = full1.z;
  out.info.get(Group::s1, 1) = {r1.info, static_cast<double>(snap1_s1.events), true};
  out.info.get(Group::s2, 1) = {r2.info, static_cast<double>(snap1_s2.events), true};
  out.info.get(Group::full, 1) = {full1.info,
                                  static_cast<double>(snap1_s1.events + snap1_s2.events),
                                  true};
  out.valid = true;

  out.selected = select(r1.z, r2.z, spec.zeta);
  out.visits_per_patient = sim::mean_visits_per_subject(dataset, out.calendar_stage1);
  out.events_total = out.info.get(Group::full, 1).events;
  if (out.selected == Selection::none) {
    out.decision = Decision::futility_stop_stage1;
    out.stage_stopped = 1;
    return out;
  }

  // Stage-1 boundaries from the observed information fractions.
  design::StageOneInfo info1{r1.info, r2.info, full1.info};
  const double t1_frac = design::spend_fraction(full1.info, design.plan.i_max);
  out.boundaries.alpha1 = spec.alpha * t1_frac * t1_frac;
  out.boundaries.beta1 = spec.beta * t1_frac * t1_frac;
  design::StageOneBoundaries s1b;
  try {
    s1b = design::solve_stage1_boundaries(out.boundaries.alpha1, out.boundaries.beta1,
                                          spec, info1);
  } catch (const std::exception& ex) {
    out.valid = false;
    out.note = std::string("stage-1 boundary solve failed: ") + ex.what();
    return out;
  }
  out.boundaries.a1 = s1b.a1;
  out.boundaries.b1 = s1b.b1;

  const double z_sel = out.selected == Selection::s1
                           ? r1.z
                           : (out.selected == Selection::s2 ? r2.z : full1.z);
  const Verdict v1 = decide(z_sel, s1b.a1, s1b.b1);
  if (v1 == Verdict::efficacy) {
    out.decision = Decision::efficacy_stop_stage1;
    out.stage_stopped = 1;
    return out;
  }
  if (v1 == Verdict::futility) {
    out.decision = Decision::accept;
    out.stage_stopped = 1;
    return out;
  }

  // Continue: recruitment after the interim flows into the selected
  // population; complement data are frozen at stage 1. When the closed
  // cohort can never produce the planned event total, recruitment keeps
  // going at the accrual rate until it can.
  sim::TrialDataset enriched = dataset;
  if (out.selected != Selection::full)
    sim::enrich_accrual(enriched, out.calendar_stage1,
                        static_cast<int>(out.selected));
  const int extend_group =
      out.selected == Selection::full ? -1 : static_cast<int>(out.selected);
  for (int round = 0; round < 6; ++round) {
    const long reachable = sim::potential_events(enriched, to_pop(out.selected));
    const long missing = design.plan.d_total - reachable;
    if (missing <= 0) break;
    double start = std::max(out.calendar_stage1, enriched.scenario.accrual_span());
    for (const auto& s : enriched.subjects) start = std::max(start, s.accrual_time);
    sim::extend_accrual(enriched, start, extend_group,
                        static_cast<int>(missing * 10 / 7 + 10));
  }

  const auto stage2_time = sim::calendar_of_nth_event(
      enriched, to_pop(out.selected), static_cast<int>(design.plan.d_total));
  out.calendar_stage2 = stage2_time.calendar_time;
  out.shortfall = out.shortfall || stage2_time.shortfall;

  // Observed stage-2 information for the selected population; predictions
  // for the groups no longer observed.
  const double d_total = static_cast<double>(design.plan.d_total);
  const double d1_obs = out.info.get(Group::s1, 1).events;
  const double d2_obs = out.info.get(Group::s2, 1).events;
  const double dF_obs = out.info.get(Group::full, 1).events;

  fit::AnalysisResult sel2;
  design::StageTwoInfo info2;
  if (out.selected == Selection::full) {
    const auto snap2_s1 = sim::snapshot_at(enriched, sim::PopulationSel::s1, out.calendar_stage2);
    const auto snap2_s2 = sim::snapshot_at(enriched, sim::PopulationSel::s2, out.calendar_stage2);
    const auto f1 = fit_group(method, snap2_s1, Group::s1, 2, design.t_star);
    const auto f2 = fit_group(method, snap2_s2, Group::s2, 2, design.t_star);
    if (!f1.converged || !f2.converged) {
      out.valid = false;
      out.note = "stage-2 fit failed: " + (f1.converged ? f2.note : f1.note);
      return out;
    }
    const auto fullc = combine_full(f1, f2, lambda);
    sel2.z = fullc.z;
    sel2.theta_hat = fullc.theta;
    sel2.info = fullc.info;
    sel2.converged = true;
    info2.info1 = design::predict_info(r1.info, d1_obs, d_total);
    info2.info2 = design::predict_info(r2.info, d2_obs, d_total);
    info2.infoF = fullc.info;
    out.info.get(Group::s1, 2) = {f1.info, static_cast<double>(snap2_s1.events), true};
    out.info.get(Group::s2, 2) = {f2.info, static_cast<double>(snap2_s2.events), true};
    out.info.get(Group::full, 2) = {fullc.info, d_total, true};
  } else {
    const auto snap2 = sim::snapshot_at(enriched, to_pop(out.selected), out.calendar_stage2);
    sel2 = fit_group(method, snap2, to_group(out.selected), 2, design.t_star);
    if (!sel2.converged) {
      out.valid = false;
      out.note = "stage-2 fit failed: " + sel2.note;
      return out;
    }
    const bool sel_is_s1 = out.selected == Selection::s1;
    info2.info1 = sel_is_s1 ? sel2.info : design::predict_info(r1.info, d1_obs, d_total);
    info2.info2 = sel_is_s1 ? design::predict_info(r2.info, d2_obs, d_total) : sel2.info;
    info2.infoF = design::predict_info(full1.info, dF_obs, d_total);
    out.info.get(Group::s1, 2) = {info2.info1, sel_is_s1 ? d_total : d1_obs, sel_is_s1};
    out.info.get(Group::s2, 2) = {info2.info2, sel_is_s1 ? d2_obs : d_total, !sel_is_s1};
    out.info.get(Group::full, 2) = {info2.infoF, dF_obs, false};
  }
  out.z_selected_stage2 = sel2.z;

  // Guard the conditional law: predicted levels may not regress.
  for (double* lvl : {&info2.info1, &info2.info2, &info2.infoF}) {
    const double base =
        lvl == &info2.info1 ? r1.info : (lvl == &info2.info2 ? r2.info : full1.info);
    if (*lvl <= base) *lvl = base * (1.0 + 1e-6);
  }

  const double t2_frac = design::spend_fraction(info2.infoF, design.plan.i_max);
  out.boundaries.alpha2 = spec.alpha * t2_frac * t2_frac - out.boundaries.alpha1;
  out.boundaries.beta2 = spec.beta * t2_frac * t2_frac - out.boundaries.beta1;
  design::StageTwoBoundaries s2b;
  try {
    s2b = design::solve_stage2_boundaries(out.boundaries.alpha2, out.boundaries.beta2,
                                          spec, info1, info2, s1b.a1, s1b.b1);
  } catch (const std::exception& ex) {
    out.valid = false;
    out.note = std::string("stage-2 boundary solve failed: ") + ex.what();
    return out;
  }
  // Final analysis: the alpha-driven bound binds on both sides.
  out.boundaries.b2 = s2b.b2;
  out.boundaries.a2 = s2b.b2;

  out.stage_stopped = 2;
  out.events_total = d_total;
  out.visits_per_patient = sim::mean_visits_per_subject(enriched, out.calendar_stage2);
  out.decision = decide(sel2.z, out.boundaries.a2, out.boundaries.b2) == Verdict::efficacy
                     ? Decision::reject_selected
                     : Decision::accept;
  return out;
}

TrialOutcome run_trial(const sim::Scenario& scenario, const DesignInputs& design,
                       fit::Method method, std::uint64_t seed,
                       std::uint64_t replicate) {
  const auto dataset = sim::simulate_population(scenario, seed, replicate);
  return run_trial_on(dataset, design, method);
}

AnalyticDesign make_analytic_design(const DesignInputs& inputs) {
  inputs.validate();
  AnalyticDesign des;
  des.inputs = inputs;
  des.seq = design::planned_sequences(inputs.plan, inputs.spec.lambda, inputs.plan.i_max);
  des.boundaries =
      design::solve_boundaries(inputs.spec, des.seq.stage1, des.seq.stage2,
                               inputs.plan.i_max, true);
  des.c1 = inputs.spec.lambda * std::sqrt(des.seq.stage1.infoF / des.seq.stage1.info1);
  des.c2 =
      (1.0 - inputs.spec.lambda) * std::sqrt(des.seq.stage1.infoF / des.seq.stage1.info2);
  return des;
}

AnalyticOutcome run_trial_analytic(const AnalyticDesign& des,
                                   const design::ThetaConfig& theta,
                                   math::RngStream& rng) {
  AnalyticOutcome out;
  const auto& seq = des.seq;
  const double z1 = theta.theta1 * std::sqrt(seq.stage1.info1) + rng.normal();
  const double z2 = theta.theta2 * std::sqrt(seq.stage1.info2) + rng.normal();
  const double zF = des.c1 * z1 + des.c2 * z2;

  out.selected = select(z1, z2, des.inputs.spec.zeta);
  if (out.selected == Selection::none) return out;

  const double z_sel = out.selected == Selection::s1
                           ? z1
                           : (out.selected == Selection::s2 ? z2 : zF);
  const Verdict v1 = decide(z_sel, des.boundaries.a1, des.boundaries.b1);
  if (v1 == Verdict::efficacy) {
    out.rejected = true;
    return out;
  }
  if (v1 == Verdict::futility) return out;

  out.stage_stopped = 2;
  const double i1 = out.selected == Selection::s1
                        ? seq.stage1.info1
                        : (out.selected == Selection::s2 ? seq.stage1.info2 : seq.stage1.infoF);
  const double i2 = seq.stage2.of(static_cast<design::Group>(out.selected));
  const double th = out.selected == Selection::s1
                        ? theta.theta1
                        : (out.selected == Selection::s2
                               ? theta.theta2
                               : theta.theta_full(des.inputs.spec.lambda));
  const double ratio = std::sqrt(i1 / i2);
  const double mean = th * std::sqrt(i2) + ratio * (z_sel - th * std::sqrt(i1));
  const double sd = std::sqrt(1.0 - i1 / i2);
  const double z_final = mean + sd * rng.normal();
  out.rejected = z_final > des.boundaries.b2;
  return out;
}

}  // namespace enrich::trial
