#pragma once

#include <cstdint>

#include "enrich/design/boundaries.hpp"
#include "enrich/design/events.hpp"
#include "enrich/design/types.hpp"
#include "enrich/fit/result.hpp"
#include "enrich/sim/population.hpp"

namespace enrich::trial {

enum class Selection { s1 = 0, s2 = 1, full = 2, none = 3 };

inline const char* selection_name(Selection s) {
  switch (s) {
    case Selection::s1: return "S1";
    case Selection::s2: return "S2";
    case Selection::full: return "F";
    default: return "none";
  }
}

enum class Decision {
  reject_selected,
  accept,
  futility_stop_stage1,
  efficacy_stop_stage1
};

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::reject_selected: return "reject";
    case Decision::accept: return "accept";
    case Decision::futility_stop_stage1: return "futility_stage1";
    default: return "efficacy_stage1";
  }
}

enum class Verdict { futility, efficacy, continue_trial };

// Threshold selection from the two stage-1 subgroup statistics.
Selection select(double z1, double z2, double zeta);

// Boundary comparison; the futility side is inclusive so ties stop.
Verdict decide(double z, double a, double b);

// Everything the engine needs that is fixed before the trial starts.
struct DesignInputs {
  design::DesignSpec spec;
  design::EventsPlan plan;
  double t_star = 5.0;  // RMST truncation

  void validate() const {
    spec.validate();
    if (plan.d1_stage1 <= 0 || plan.d_total <= 0 || !(plan.i_max > 0.0))
      throw std::invalid_argument("DesignInputs: events plan incomplete");
  }
};

struct TrialOutcome {
  bool valid = false;          // estimator failure leaves the replicate invalid
  bool shortfall = false;      // target events never accrued
  Selection selected = Selection::none;
  int stage_stopped = 1;
  Decision decision = Decision::accept;
  // Stage-1 statistics for all three populations and the stage-2 statistic
  // of the selected one.
  double z1_stage1 = 0.0, z2_stage1 = 0.0, zF_stage1 = 0.0;
  double z_selected_stage2 = 0.0;
  design::InfoState info;
  design::Boundaries boundaries;
  double calendar_stage1 = 0.0, calendar_stage2 = 0.0;
  double events_total = 0.0;   // events in the analyzed population at stop
  double visits_per_patient = 0.0;
  std::string note;
};

// Runs the two-stage enrichment trial for one method on one dataset:
// analysis at the planned S1 event count, threshold selection, error-spent
// boundaries from the observed information, optional enrichment and final
// analysis at the planned total event count. Data from the unselected
// complement are frozen at stage 1 and only used through the information
// predictions.
TrialOutcome run_trial_on(const sim::TrialDataset& dataset,
                          const DesignInputs& design, fit::Method method);

// Convenience wrapper generating the dataset from (seed, replicate).
TrialOutcome run_trial(const sim::Scenario& scenario, const DesignInputs& design,
                       fit::Method method, std::uint64_t seed,
                       std::uint64_t replicate);

// Design-level engine: exact stage-1 statistics from the planned
// information sequences and conditional stage-2 draws, bypassing data
// generation and estimation. Used for the error-rate verification paths.
struct AnalyticDesign {
  DesignInputs inputs;
  design::PlannedSequences seq;
  design::Boundaries boundaries;
  double c1 = 0.0, c2 = 0.0;  // Z_F combination weights at stage 1
};

AnalyticDesign make_analytic_design(const DesignInputs& inputs);

struct AnalyticOutcome {
  Selection selected = Selection::none;
  bool rejected = false;
  int stage_stopped = 1;
};

AnalyticOutcome run_trial_analytic(const AnalyticDesign& des,
                                   const design::ThetaConfig& theta,
                                   math::RngStream& rng);

}  // namespace enrich::trial
