#include "enrich/sim/population.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "enrich/sim/hazard.hpp"

namespace enrich::sim {

namespace {

constexpr double kFortnight = 2.0 / 52.0;
constexpr double kMonth = 1.0 / 12.0;
constexpr double kFirstPhaseEnd = 0.25;

// Substream roles within one subject.
enum : std::uint64_t {
  kDrawLatent = 0,
  kDrawCensor = 1,
  kDrawEvent = 2,
  kDrawMeasure = 3,
  kDrawDesign = 4,  // accrual, subgroup, arm
};

}  // namespace

std::vector<double> measurement_schedule(double horizon) {
  std::vector<double> visits;
  if (horizon < 0.0) return visits;
  visits.push_back(0.0);
  double t = 0.0;
  while (t + kFortnight <= kFirstPhaseEnd + 1e-12) {
    t += kFortnight;
    if (t > horizon + 1e-12) return visits;
    visits.push_back(t);
  }
  while (t + kMonth <= horizon + 1e-12) {
    t += kMonth;
    visits.push_back(t);
  }
  return visits;
}

Subject sample_subject(const JointModelParams& params, int subgroup, int arm,
                       double accrual_time, int id, const math::RngStream& sub) {
  const GroupParams& gp = params.group[subgroup];
  gp.validate();

  Subject s;
  s.id = id;
  s.subgroup = subgroup;
  s.arm = arm;
  s.accrual_time = accrual_time;

  // Bivariate normal random effects via Cholesky.
  auto latent = sub.substream(kDrawLatent);
  const double z0 = latent.normal();
  const double z1 = latent.normal();
  const double l11 = std::sqrt(gp.phi1);
  const double l21 = gp.phi1 > 0.0 ? gp.phi12 / l11 : 0.0;
  const double l22sq = gp.phi2 - l21 * l21;
  const double l22 = std::sqrt(std::max(0.0, l22sq));
  s.b0 = gp.mu0 + l11 * z0;
  s.b1 = gp.mu1 + l21 * z0 + l22 * z1;

  auto censor = sub.substream(kDrawCensor);
  s.censor_time = censor.exponential(params.censor_rate_per_year());

  auto event = sub.substream(kDrawEvent);
  const double slope_eff = s.b1 + gp.b2 * arm;
  const EventDraw draw = sample_event_time(s.b0, slope_eff, arm, gp, event.exponential(1.0));
  s.event_time = draw.time;
  s.event_capped = draw.capped;

  const double follow = std::min(s.event_time, s.censor_time);
  s.visit_times = measurement_schedule(follow);
  s.values.resize(s.visit_times.size());
  auto meas = sub.substream(kDrawMeasure);
  const double sigma = std::sqrt(gp.sigma2);
  for (size_t k = 0; k < s.visit_times.size(); ++k) {
    const double v = s.visit_times[k];
    s.values[k] = s.b0 + slope_eff * v + sigma * meas.normal();
  }
  return s;
}

TrialDataset simulate_population(const Scenario& scenario, std::uint64_t seed,
                                 std::uint64_t stream_id) {
  scenario.params.validate();
  TrialDataset data;
  data.scenario = scenario;
  data.seed = seed;
  data.stream_id = stream_id;
  data.subjects.reserve(scenario.n_max);
  math::RngStream rep(seed, stream_id);
  const double span = scenario.accrual_span();
  for (int i = 0; i < scenario.n_max; ++i) {
    auto sub = rep.substream(static_cast<std::uint64_t>(i));
    auto dsgn = sub.substream(kDrawDesign);
    const double accrual = dsgn.uniform() * span;
    const int subgroup = dsgn.uniform() < scenario.params.lambda ? 0 : 1;
    const int arm = dsgn.uniform() < 0.5 ? 1 : 0;
    data.subjects.push_back(
        sample_subject(scenario.params, subgroup, arm, accrual, i, sub));
  }
  return data;
}

void enrich_accrual(TrialDataset& data, double calendar_time, int selected_subgroup) {
  if (selected_subgroup != 0 && selected_subgroup != 1) return;
  math::RngStream rep(data.seed, data.stream_id);
  for (auto& s : data.subjects) {
    if (s.accrual_time > calendar_time && s.subgroup != selected_subgroup) {
      auto sub = rep.substream(static_cast<std::uint64_t>(s.id));
      s = sample_subject(data.scenario.params, selected_subgroup, s.arm,
                         s.accrual_time, s.id, sub);
    }
  }
}

void extend_accrual(TrialDataset& data, double start_time, int subgroup, int count) {
  math::RngStream rep(data.seed, data.stream_id);
  const double rate = data.scenario.accrual_rate;
  int next_id = static_cast<int>(data.subjects.size());
  for (const auto& s : data.subjects) next_id = std::max(next_id, s.id + 1);
  for (int k = 0; k < count; ++k) {
    const int id = next_id + k;
    auto sub = rep.substream(static_cast<std::uint64_t>(id));
    auto dsgn = sub.substream(4);  // kDrawDesign
    const double jitter = dsgn.uniform();
    const double u_grp = dsgn.uniform();  // burned even when the label is forced
    const int grp =
        subgroup >= 0 ? subgroup : (u_grp < data.scenario.params.lambda ? 0 : 1);
    const int arm = dsgn.uniform() < 0.5 ? 1 : 0;
    const double accrual = start_time + (k + jitter) / rate;
    data.subjects.push_back(
        sample_subject(data.scenario.params, grp, arm, accrual, id, sub));
  }
}

namespace {

bool in_population(const Subject& s, PopulationSel pop) {
  return pop == PopulationSel::full || s.subgroup == static_cast<int>(pop);
}

bool is_event(const Subject& s) {
  return !s.event_capped && s.event_time <= s.censor_time;
}

}  // namespace

long potential_events(const TrialDataset& data, PopulationSel pop) {
  long n = 0;
  for (const auto& s : data.subjects)
    if (in_population(s, pop) && is_event(s)) ++n;
  return n;
}

EventTimeResult calendar_of_nth_event(const TrialDataset& data, PopulationSel pop,
                                      int target_events) {
  std::vector<std::pair<double, int>> events;  // (calendar time, id)
  for (const auto& s : data.subjects) {
    if (!in_population(s, pop) || !is_event(s)) continue;
    events.emplace_back(s.accrual_time + s.event_time, s.id);
  }
  std::sort(events.begin(), events.end());
  if (static_cast<int>(events.size()) >= target_events && target_events >= 1)
    return {events[target_events - 1].first, false};
  // Data exhausted: report the end of the observed information.
  double last = 0.0;
  for (const auto& e : events) last = std::max(last, e.first);
  return {last, true};
}

GroupSnapshot snapshot_at(const TrialDataset& data, PopulationSel pop,
                          double calendar_time) {
  GroupSnapshot snap;
  snap.calendar_time = calendar_time;
  for (const auto& s : data.subjects) {
    if (!in_population(s, pop)) continue;
    if (s.accrual_time > calendar_time) continue;  // not yet enrolled
    const double horizon = calendar_time - s.accrual_time;
    SnapshotSubject v;
    v.id = s.id;
    v.subgroup = s.subgroup;
    v.arm = s.arm;
    v.obs_time = std::min({s.event_time, s.censor_time, horizon});
    v.event = is_event(s) && s.event_time <= horizon;
    for (size_t k = 0; k < s.visit_times.size(); ++k) {
      if (s.visit_times[k] > v.obs_time + 1e-12) break;
      v.visit_times.push_back(s.visit_times[k]);
      v.values.push_back(s.values[k]);
    }
    if (v.event) ++snap.events;
    snap.subjects.push_back(std::move(v));
  }
  return snap;
}

GroupSnapshot snapshot_at_events(const TrialDataset& data, PopulationSel pop,
                                 int target_events) {
  const auto et = calendar_of_nth_event(data, pop, target_events);
  GroupSnapshot snap = snapshot_at(data, pop, et.calendar_time);
  snap.shortfall = et.shortfall;
  return snap;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_measurements_csv(const TrialDataset& data, const std::string& path) {
  auto out = open_csv(path);
  out << "subject_id,subgroup,arm,accrual_time,visit_time,value\n";
  for (const auto& s : data.subjects)
    for (size_t k = 0; k < s.visit_times.size(); ++k)
      out << s.id << ',' << s.subgroup + 1 << ',' << s.arm << ','
          << num17(s.accrual_time) << ',' << num17(s.visit_times[k]) << ','
          << num17(s.values[k]) << "\n";
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

void write_survival_csv(const TrialDataset& data, const std::string& path) {
  auto out = open_csv(path);
  out << "subject_id,time,status\n";
  for (const auto& s : data.subjects) {
    const bool event = is_event(s);
    const double t = event ? s.event_time : std::min(s.event_time, s.censor_time);
    out << s.id << ',' << num17(t) << ',' << (event ? 1 : 0) << "\n";
  }
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

double mean_visits_per_subject(const TrialDataset& data, double calendar_time) {
  long visits = 0;
  long enrolled = 0;
  for (const auto& s : data.subjects) {
    if (s.accrual_time > calendar_time) continue;
    ++enrolled;
    const double horizon = calendar_time - s.accrual_time;
    const double cut = std::min({s.event_time, s.censor_time, horizon});
    for (double v : s.visit_times) {
      if (v > cut + 1e-12) break;
      ++visits;
    }
  }
  return enrolled == 0 ? 0.0 : static_cast<double>(visits) / enrolled;
}

}  // namespace enrich::sim
