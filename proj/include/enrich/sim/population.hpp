#pragma once

#include <vector>

#include "enrich/math/rng.hpp"
#include "enrich/sim/params.hpp"

namespace enrich::sim {

// Clinic schedule relative to study entry: baseline at 0, fortnightly for the
// first quarter year, monthly afterwards, truncated at the horizon.
std::vector<double> measurement_schedule(double horizon);

struct Subject {
  int id = 0;
  int subgroup = 0;  // 0 = S1, 1 = S2
  int arm = 0;       // 1 = experimental
  double accrual_time = 0.0;
  double b0 = 0.0, b1 = 0.0;   // latent random effects
  double event_time = 0.0;     // years from entry
  bool event_capped = false;   // hit the administrative sampling horizon
  double censor_time = 0.0;    // competing loss to follow-up
  std::vector<double> visit_times;  // <= min(event, censor), strictly increasing
  std::vector<double> values;       // observed biomarker at the visit times
};

struct TrialDataset {
  std::vector<Subject> subjects;
  Scenario scenario;
  std::uint64_t seed = 0, stream_id = 0;
};

// One subject from the joint model: random effects by Cholesky, event time
// by inverse transform, censoring exponential, measurements on the schedule
// up to min(event, censor). All randomness flows through dedicated
// substreams of `sub` so regenerating with a different subgroup label keeps
// every latent draw fixed.
Subject sample_subject(const JointModelParams& params, int subgroup, int arm,
                       double accrual_time, int id, const math::RngStream& sub);

// Population with uniform accrual over [0, n_max/rate], Bernoulli(lambda)
// subgroup labels and 1:1 randomization.
TrialDataset simulate_population(const Scenario& scenario, std::uint64_t seed,
                                 std::uint64_t stream_id);

// Redirects accrual after `calendar_time` to the selected subgroup: subjects
// not yet accrued are relabeled and their outcomes regenerated from the same
// underlying draws. No effect when the full population continues.
void enrich_accrual(TrialDataset& data, double calendar_time, int selected_subgroup);

// Appends `count` additional subjects accruing at the scenario rate from
// `start_time`, recruited from the given subgroup (or the natural mix when
// subgroup < 0). Extends recruitment when an events-based analysis target
// exceeds what the closed cohort can ever deliver.
void extend_accrual(TrialDataset& data, double start_time, int subgroup, int count);

// Population filter for analysis snapshots.
enum class PopulationSel { s1 = 0, s2 = 1, full = 2 };

// Events the population will eventually produce if followed indefinitely.
long potential_events(const TrialDataset& data, PopulationSel pop);

struct SnapshotSubject {
  int id;
  int subgroup;
  int arm;
  double obs_time;  // min(event, censor, calendar - accrual), years from entry
  bool event;
  std::vector<double> visit_times;  // truncated to the snapshot horizon
  std::vector<double> values;
};

struct GroupSnapshot {
  std::vector<SnapshotSubject> subjects;
  int events = 0;
  double calendar_time = 0.0;
  bool shortfall = false;
};

struct EventTimeResult {
  double calendar_time;
  bool shortfall;
};

// Calendar time at which the target-th event occurs in the population
// (events ordered by calendar time, ties broken by subject id). When the
// data run out the last event time is returned with the shortfall flag set.
EventTimeResult calendar_of_nth_event(const TrialDataset& data, PopulationSel pop,
                                      int target_events);

// Administratively censors everyone at the calendar time and truncates
// measurements; only subjects accrued by then appear.
GroupSnapshot snapshot_at(const TrialDataset& data, PopulationSel pop,
                          double calendar_time);

GroupSnapshot snapshot_at_events(const TrialDataset& data, PopulationSel pop,
                                 int target_events);

// Mean number of clinic visits per accrued subject up to the calendar time.
double mean_visits_per_subject(const TrialDataset& data, double calendar_time);

// Dataset export: one row per measurement
// (subject_id, subgroup, arm, accrual_time, visit_time, value) and one row
// per subject for survival (subject_id, time, status). UTF-8, LF endings,
// '.' decimal separator.
void write_measurements_csv(const TrialDataset& data, const std::string& path);
void write_survival_csv(const TrialDataset& data, const std::string& path);

}  // namespace enrich::sim
