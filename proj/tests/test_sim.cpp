#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "enrich/math/quadrature.hpp"
#include "enrich/math/rng.hpp"
#include "enrich/sim/hazard.hpp"
#include "enrich/sim/population.hpp"

#include <filesystem>
#include <fstream>

using namespace enrich;
using namespace enrich::sim;

TEST_CASE("cumulative_hazard: zero at origin, continuity, quadrature oracle") {
  GroupParams gp;
  gp.eta = -0.3;
  gp.b2 = -0.2;
  CHECK(cumulative_hazard(0.0, 4.0, 2.0, 1, gp) == 0.0);

  math::RngStream rng(3, 0);
  for (int rep = 0; rep < 20; ++rep) {
    GroupParams p;
    p.gamma = -0.5 + 1.5 * rng.uniform();
    p.c = 0.005 + 0.05 * rng.uniform();
    p.eta = -0.5 + rng.uniform();
    const double b0 = 2.0 + 2.0 * rng.normal();
    const double slope = -1.0 + 3.0 * rng.uniform();
    const int arm = rng.uniform() < 0.5;

    // continuity across the baseline step
    const double below = cumulative_hazard(1.0 - 1e-13, b0, slope, arm, p);
    const double above = cumulative_hazard(1.0 + 1e-13, b0, slope, arm, p);
    CHECK(std::abs(below - above) < 1e-10 * std::max(1.0, below));

    const double t = 0.3 + 3.0 * rng.uniform();
    const double direct = cumulative_hazard(t, b0, slope, arm, p);
    auto rate = [&](double s) { return hazard_rate(s, b0, slope, arm, p); };
    // integrate each smooth piece separately around the baseline step
    const double tol = 1e-12 * std::max(1.0, direct);
    const double quad = t <= 1.0 ? math::integrate(rate, 0.0, t, tol)
                                 : math::integrate(rate, 0.0, 1.0, tol) +
                                       math::integrate(rate, 1.0, t, tol);
    CHECK(direct == doctest::Approx(quad).epsilon(1e-8));
  }

  // Series branch at tiny gamma * slope agrees with the generic branch.
  GroupParams tiny;
  tiny.gamma = 1e-9;
  const double h_tiny = cumulative_hazard(2.0, 1.0, 1.0, 0, tiny);
  GroupParams small;
  small.gamma = 1e-5;
  const double h_small = cumulative_hazard(2.0, 1.0, 1.0, 0, small);
  CHECK(h_tiny == doctest::Approx(h_small).epsilon(1e-4));
}

TEST_CASE("sample_event_time: km curve matches exp(-H), analytic median, monotone") {
  GroupParams gp;  // standard parameters, association on
  const double b0 = 4.23, slope = 1.81;
  math::RngStream rng(17, 1);

  const int N = 100000;
  std::vector<double> times(N);
  for (int i = 0; i < N; ++i)
    times[i] = sample_event_time(b0, slope, 0, gp, rng.exponential(1.0)).time;
  std::sort(times.begin(), times.end());
  // all sampled: empirical cdf vs 1 - exp(-H)
  double sup = 0.0;
  for (int i = 0; i < N; i += 97) {
    const double t = times[i];
    const double emp = static_cast<double>(i + 1) / N;
    const double theo = 1.0 - std::exp(-cumulative_hazard(t, b0, slope, 0, gp));
    sup = std::max(sup, std::abs(emp - theo));
  }
  CHECK(sup < 0.01);

  // gamma = 0: piecewise-exponential with a kink; median solves H = log 2.
  GroupParams flat;
  flat.gamma = 0.0;
  flat.c = 0.5;
  // H(t) = 0.5 t for t <= 1, 0.5 + (5/6)(t-1) beyond; log 2 > 0.5 so the
  // median sits past the kink.
  const double median_true = 1.0 + (std::log(2.0) - 0.5) / (5.0 * 0.5 / 3.0);
  const double med = sample_event_time(0.0, 1.7, 0, flat, std::log(2.0)).time;
  CHECK(med == doctest::Approx(median_true).epsilon(1e-9));

  // monotone coupling in the exponential draw
  const double t_small = sample_event_time(b0, slope, 0, gp, 0.3).time;
  const double t_large = sample_event_time(b0, slope, 0, gp, 0.9).time;
  CHECK(t_small < t_large);

  // negative association with negative slope can cap out
  GroupParams neg;
  neg.gamma = 0.8;
  neg.c = 1e-6;
  const auto capped = sample_event_time(-8.0, -2.0, 0, neg, 5.0);
  CHECK(capped.capped);
  CHECK(capped.time == 50.0);
}

TEST_CASE("measurement_schedule: fortnightly then monthly") {
  const auto v = measurement_schedule(0.25);
  CHECK(v.size() == 7);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == doctest::Approx(6.0 * 2.0 / 52.0));
  for (size_t i = 1; i < v.size(); ++i)
    CHECK(v[i] - v[i - 1] == doctest::Approx(2.0 / 52.0));

  const auto v0 = measurement_schedule(0.0);
  CHECK(v0.size() == 1);
  CHECK(v0[0] == 0.0);

  const auto v2 = measurement_schedule(1.0);
  for (size_t i = 1; i < v2.size(); ++i) {
    const double gap = v2[i] - v2[i - 1];
    if (v2[i] > 0.25 + 1e-9) CHECK(gap == doctest::Approx(1.0 / 12.0));
  }
  CHECK(std::is_sorted(v2.begin(), v2.end()));
}

TEST_CASE("sample_subject: exact line at zero noise, latent moments, censor fraction") {
  JointModelParams params;

  SUBCASE("zero measurement noise puts observations on the line") {
    JointModelParams p0 = params;
    p0.group[0].sigma2 = 0.0;
    p0.group[0].b2 = -0.5;
    math::RngStream rng(5, 2);
    const auto s = sample_subject(p0, 0, 1, 0.0, 0, rng.substream(0));
    REQUIRE(s.visit_times.size() >= 1);
    for (size_t k = 0; k < s.visit_times.size(); ++k) {
      const double line = s.b0 + (s.b1 + p0.group[0].b2) * s.visit_times[k];
      CHECK(s.values[k] == doctest::Approx(line).epsilon(1e-12));
    }
  }

  SUBCASE("latent moments match the random-effects law") {
    math::RngStream rng(6, 3);
    const int N = 100000;
    double m0 = 0, m1 = 0, v0 = 0, v1 = 0, cv = 0;
    std::vector<std::pair<double, double>> draws;
    draws.reserve(N);
    for (int i = 0; i < N; ++i) {
      const auto s = sample_subject(params, 0, 0, 0.0, i, rng.substream(i));
      draws.emplace_back(s.b0, s.b1);
      m0 += s.b0;
      m1 += s.b1;
    }
    m0 /= N;
    m1 /= N;
    for (const auto& d : draws) {
      v0 += (d.first - m0) * (d.first - m0);
      v1 += (d.second - m1) * (d.second - m1);
      cv += (d.first - m0) * (d.second - m1);
    }
    v0 /= N - 1;
    v1 /= N - 1;
    cv /= N - 1;
    CHECK(m0 == doctest::Approx(4.23).epsilon(0.012));
    CHECK(m1 == doctest::Approx(1.81).epsilon(0.028));
    CHECK(v0 == doctest::Approx(2.5).epsilon(0.05));
    CHECK(v1 == doctest::Approx(5.0).epsilon(0.05));
    CHECK(cv == doctest::Approx(1.7).epsilon(0.05));
  }

  SUBCASE("loss to follow-up over five years") {
    math::RngStream rng(7, 4);
    const int N = 100000;
    int lost = 0;
    for (int i = 0; i < N; ++i) {
      const auto s = sample_subject(params, 1, 0, 0.0, i, rng.substream(i));
      if (s.censor_time < 5.0) ++lost;
    }
    const double frac = static_cast<double>(lost) / N;
    CHECK(frac == doctest::Approx(0.09).epsilon(0.12));
    CHECK(frac > 0.08);
    CHECK(frac < 0.10);
  }
}

TEST_CASE("simulate_population: accrual, prevalence, balance, determinism") {
  Scenario scen = Scenario::alternative();
  scen.n_max = 10000;
  scen.accrual_rate = 5000.0;
  const auto data = simulate_population(scen, 42, 0);
  CHECK(data.subjects.size() == 10000);

  double max_accrual = 0.0;
  long in_s1 = 0;
  long treated_s1 = 0, n_s1 = 0;
  for (const auto& s : data.subjects) {
    max_accrual = std::max(max_accrual, s.accrual_time);
    if (s.subgroup == 0) {
      ++in_s1;
      ++n_s1;
      treated_s1 += s.arm;
    }
  }
  CHECK(max_accrual <= 2.0);
  CHECK(static_cast<double>(in_s1) / 10000 == doctest::Approx(1.0 / 3.0).epsilon(0.045));
  CHECK(static_cast<double>(treated_s1) / n_s1 == doctest::Approx(0.5).epsilon(0.04));

  // byte-level determinism
  const auto again = simulate_population(scen, 42, 0);
  bool identical = true;
  for (size_t i = 0; i < data.subjects.size(); ++i) {
    const auto& a = data.subjects[i];
    const auto& b = again.subjects[i];
    identical = identical && a.b0 == b.b0 && a.b1 == b.b1 &&
                a.event_time == b.event_time && a.censor_time == b.censor_time &&
                a.values == b.values && a.subgroup == b.subgroup && a.arm == b.arm;
  }
  CHECK(identical);

  // different stream gives different data
  const auto other = simulate_population(scen, 42, 1);
  CHECK(other.subjects[0].b0 != data.subjects[0].b0);
}

TEST_CASE("snapshots: event counting, truncation, monotone calendar") {
  Scenario scen = Scenario::alternative();
  scen.n_max = 400;
  const auto data = simulate_population(scen, 9, 7);

  const auto first = calendar_of_nth_event(data, PopulationSel::s1, 1);
  CHECK(!first.shortfall);
  const auto at10 = calendar_of_nth_event(data, PopulationSel::s1, 10);
  const auto at30 = calendar_of_nth_event(data, PopulationSel::s1, 30);
  CHECK(at10.calendar_time <= at30.calendar_time);

  const auto snap = snapshot_at_events(data, PopulationSel::s1, 30);
  CHECK(snap.events == 30);
  for (const auto& s : snap.subjects) {
    CHECK(s.subgroup == 0);
    for (double v : s.visit_times) CHECK(v <= s.obs_time + 1e-12);
    CHECK(s.obs_time <= snap.calendar_time + 1e-12);
  }

  // shortfall when asking for more events than the data hold
  const auto big = calendar_of_nth_event(data, PopulationSel::s1, 100000);
  CHECK(big.shortfall);

  // no measurement after the observed time; no event past administrative
  // censoring
  const auto full = snapshot_at(data, PopulationSel::full, 1.0);
  for (const auto& s : full.subjects) {
    if (s.event) CHECK(s.obs_time <= 1.0 + 1e-12);
  }
}

TEST_CASE("enrich_accrual: relabels only late accruals, keeps latent draws") {
  Scenario scen = Scenario::alternative();
  scen.n_max = 300;
  auto data = simulate_population(scen, 13, 0);
  const auto before = data.subjects;
  const double cut = 1.0;
  enrich_accrual(data, cut, 0);
  for (size_t i = 0; i < data.subjects.size(); ++i) {
    const auto& a = before[i];
    const auto& b = data.subjects[i];
    if (a.accrual_time <= cut) {
      CHECK(a.subgroup == b.subgroup);
      CHECK(a.event_time == b.event_time);
    } else {
      CHECK(b.subgroup == 0);
      CHECK(a.b0 == b.b0);  // latent draws survive the relabel
      CHECK(a.b1 == b.b1);
      CHECK(a.censor_time == b.censor_time);
      CHECK(a.arm == b.arm);
      if (a.subgroup == 0) CHECK(a.event_time == b.event_time);
    }
  }
}

TEST_CASE("dataset export: measurement and survival files") {
  namespace fs = std::filesystem;
  Scenario scen = Scenario::alternative();
  scen.n_max = 40;
  const auto data = simulate_population(scen, 77, 0);
  const auto dir = fs::temp_directory_path() / "enrich_sim_export";
  fs::create_directories(dir);
  const auto mpath = (dir / "meas.csv").string();
  const auto spath = (dir / "surv.csv").string();
  write_measurements_csv(data, mpath);
  write_survival_csv(data, spath);

  std::ifstream min(mpath);
  std::string line;
  std::getline(min, line);
  CHECK(line == "subject_id,subgroup,arm,accrual_time,visit_time,value");
  long mrows = 0;
  while (std::getline(min, line)) ++mrows;
  long expect = 0;
  for (const auto& s : data.subjects) expect += static_cast<long>(s.visit_times.size());
  CHECK(mrows == expect);

  std::ifstream sin(spath);
  std::getline(sin, line);
  CHECK(line == "subject_id,time,status");
  long srows = 0;
  long events = 0;
  while (std::getline(sin, line)) {
    ++srows;
    if (line.size() >= 2 && line[line.size() - 1] == '1' && line[line.size() - 2] == ',')
      ++events;
  }
  CHECK(srows == static_cast<long>(data.subjects.size()));
  CHECK(events == potential_events(data, PopulationSel::full));
  fs::remove_all(dir);
}

TEST_CASE("survival law: km matches exp(-H) across random parameter draws") {
  math::RngStream prng(909, 0);
  for (int draw = 0; draw < 5; ++draw) {
    GroupParams gp;
    gp.gamma = draw == 0 ? 0.0 : -0.3 + 0.5 * draw;  // includes gamma = 0
    gp.c = 0.05 + 0.1 * prng.uniform();
    const double b0 = 1.0 + prng.normal();
    const double slope = 0.5 + prng.uniform();
    math::RngStream rng(910 + draw, 0);
    const int N = 100000;
    std::vector<double> times(N);
    for (int i = 0; i < N; ++i)
      times[i] = sample_event_time(b0, slope, 0, gp, rng.exponential(1.0)).time;
    std::sort(times.begin(), times.end());
    double sup = 0.0;
    for (int i = 0; i < N; i += 211) {
      const double t = times[i];
      if (t >= 50.0) break;
      const double emp = static_cast<double>(i + 1) / N;
      const double theo = 1.0 - std::exp(-cumulative_hazard(t, b0, slope, 0, gp));
      sup = std::max(sup, std::abs(emp - theo));
    }
    CHECK(sup < 0.01);
  }
}
