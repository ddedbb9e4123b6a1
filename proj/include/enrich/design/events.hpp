#pragma once

#include <cstdint>

#include "enrich/design/types.hpp"
#include "enrich/fit/result.hpp"
#include "enrich/sim/params.hpp"

namespace enrich::design {

// Simulation calibration of the events-per-information constants: one large
// cohort is generated under the alternative, progressively right-censored at
// a grid of its own event times, re-analyzed at each cut, and a
// through-origin line of events on information gives m_j per population.
// Snapshots where the analysis fails to converge are dropped and counted.
struct MCalibrationConfig {
  sim::Scenario scenario = sim::Scenario::alternative();
  fit::Method method = fit::Method::cond_score;
  int n_patients = 5000;
  int max_snapshots = 24;      // event-time grid is strided down to this many
  int min_events = 10;         // earliest snapshot
  std::uint64_t seed = 20240u;
};

EventsPlan calibrate_m(const MCalibrationConfig& config);

// Fills the planned stage-1 event counts from the required information and
// the prevalence ratios; when i_max is already known also fixes the total.
void plan_events(const DesignSpec& spec, EventsPlan& plan);
void finalize_events(EventsPlan& plan);  // d_total = ceil(i_max * mF)

// Predicted information at the second analysis for a group that stopped
// being observed, from the proportionality of information and events.
double predict_info(double info_j1, double d_j1, double d_total);

}  // namespace enrich::design
