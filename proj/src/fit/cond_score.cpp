#include <algorithm>
#include <cmath>

#include "enrich/fit/engines.hpp"
#include "enrich/fit/longitudinal.hpp"

namespace enrich::fit {

namespace {

struct CsSubject {
  double time;
  bool event;
  int arm;
  int id;
  SubjectHistory history;
  double v2;       // second visit time; risk-set entry requires v2 <= t
  int total_visits;
};

struct EventRef {
  double time;
  size_t idx;
};

struct CsData {
  std::vector<CsSubject> subjects;
  std::vector<EventRef> events;  // eligible events, time-ordered
  double sigma2 = 0.0;
  long eligible_events_by_arm[2] = {0, 0};
};

CsData prepare(const sim::GroupSnapshot& snap) {
  CsData d;
  d.subjects.reserve(snap.subjects.size());
  double rss_sum = 0.0;
  long dof_sum = 0;
  for (const auto& s : snap.subjects) {
    CsSubject cs;
    cs.time = s.obs_time;
    cs.event = s.event;
    cs.arm = s.arm;
    cs.id = s.id;
    cs.history = SubjectHistory(s.visit_times, s.values);
    cs.v2 = cs.history.second_visit_time();
    cs.total_visits = cs.history.total_visits();
    if (cs.total_visits > 2) {
      if (auto full = fit_full_line(s.visit_times, s.values)) {
        rss_sum += full->rss;
        dof_sum += cs.total_visits - 2;
      }
    }
    d.subjects.push_back(std::move(cs));
  }
  d.sigma2 = dof_sum > 0 ? rss_sum / dof_sum : 0.0;
  for (size_t i = 0; i < d.subjects.size(); ++i) {
    const auto& cs = d.subjects[i];
    // Events count only when the subject carries enough history (two visits
    // by its failure time) to enter its own risk set.
    if (cs.event && cs.v2 <= cs.time + 1e-12) {
      d.events.push_back({cs.time, i});
      ++d.eligible_events_by_arm[cs.arm];
    }
  }
  std::sort(d.events.begin(), d.events.end(), [&](const EventRef& a, const EventRef& b) {
    if (a.time != b.time) return a.time < b.time;
    return d.subjects[a.idx].id < d.subjects[b.idx].id;
  });
  return d;
}

// Conditioning statistic for subject i at event time t: the history-limited
// trajectory estimate, plus the gamma sigma^2 psi correction when the
// subject is the one failing at t.
inline double suff_stat(double x_hat, double psi, bool failing, double gamma,
                        double sigma2) {
  return failing ? x_hat + gamma * sigma2 * psi : x_hat;
}

// Score evaluation; optionally collects per-subject score residuals (event
// jump minus the subject's risk-share of every event it sits in), which sum
// to the total score and carry the cross-subject dependence the sandwich
// variance needs.
void score_eval(const CsData& d, double gamma, double eta, double sigma2,
                double u[2], std::vector<std::array<double, 2>>* contrib) {
  u[0] = u[1] = 0.0;
  if (contrib) contrib->assign(d.subjects.size(), {0.0, 0.0});
  std::vector<double> wbuf, sbuf;
  std::vector<size_t> ibuf;
  for (const auto& ev : d.events) {
    const double t = ev.time;
    double s0 = 0.0, s1s = 0.0, s1z = 0.0;
    double s_fail = 0.0;
    if (contrib) {
      wbuf.clear();
      sbuf.clear();
      ibuf.clear();
    }
    for (size_t i = 0; i < d.subjects.size(); ++i) {
      const auto& r = d.subjects[i];
      if (r.time < t - 1e-15 || r.v2 > t + 1e-12) continue;
      const auto hf = r.history.at(t);
      if (!hf) continue;
      const bool failing = (i == ev.idx);
      const double s = suff_stat(hf->x_hat, hf->psi, failing, gamma, sigma2);
      const double w =
          std::exp(gamma * s - 0.5 * gamma * gamma * sigma2 * hf->psi + eta * r.arm);
      s0 += w;
      s1s += w * s;
      s1z += w * r.arm;
      if (failing) s_fail = s;
      if (contrib) {
        wbuf.push_back(w);
        sbuf.push_back(s);
        ibuf.push_back(i);
      }
    }
    if (!(s0 > 0.0)) continue;
    const auto& f = d.subjects[ev.idx];
    const double es = s1s / s0, ez = s1z / s0;
    u[0] += s_fail - es;
    u[1] += f.arm - ez;
    if (contrib) {
      (*contrib)[ev.idx][0] += s_fail - es;
      (*contrib)[ev.idx][1] += f.arm - ez;
      for (size_t k = 0; k < ibuf.size(); ++k) {
        const double share = wbuf[k] / s0;
        (*contrib)[ibuf[k]][0] -= share * (sbuf[k] - es);
        (*contrib)[ibuf[k]][1] -= share * (d.subjects[ibuf[k]].arm - ez);
      }
    }
  }
}

}  // namespace

double pooled_sigma2(const sim::GroupSnapshot& snap) { return prepare(snap).sigma2; }

std::vector<double> conditional_score_value(const sim::GroupSnapshot& snap,
                                            double gamma, double eta, double sigma2) {
  const CsData d = prepare(snap);
  double u[2];
  score_eval(d, gamma, eta, sigma2, u, nullptr);
  return {u[0], u[1]};
}

std::vector<std::array<double, 2>> conditional_score_contributions(
    const sim::GroupSnapshot& snap, double gamma, double eta, double sigma2) {
  const CsData d = prepare(snap);
  double u[2];
  std::vector<std::array<double, 2>> contrib;
  score_eval(d, gamma, eta, sigma2, u, &contrib);
  return contrib;
}

AnalysisResult fit_conditional_score(const sim::GroupSnapshot& snap,
                                     design::Group group, int analysis) {
  AnalysisResult res;
  res.method = Method::cond_score;
  res.group = group;
  res.analysis = analysis;

  const CsData d = prepare(snap);
  const double n_j = static_cast<double>(d.subjects.size());
  if (d.eligible_events_by_arm[0] == 0 || d.eligible_events_by_arm[1] == 0) {
    res.note = "non-identifiable: eligible events missing in one arm";
    return res;
  }

  auto U = [&](double g, double e, double out[2]) {
    score_eval(d, g, e, d.sigma2, out, nullptr);
  };

  // Damped Newton with a forward-difference Jacobian.
  double g = 0.0, e = 0.0;
  double u[2];
  U(g, e, u);
  double unorm = std::max(std::abs(u[0]), std::abs(u[1]));
  const double utol = 1e-8 * std::max(1.0, n_j);
  bool ok = false;
  for (int it = 0; it < 50 && !ok; ++it) {
    res.iterations = it + 1;
    if (unorm < utol) {
      ok = true;
      break;
    }
    const double hg = 1e-6 * std::max(1.0, std::abs(g));
    const double he = 1e-6 * std::max(1.0, std::abs(e));
    double ug[2], ue[2];
    U(g + hg, e, ug);
    U(g, e + he, ue);
    const double J[2][2] = {{(ug[0] - u[0]) / hg, (ue[0] - u[0]) / he},
                            {(ug[1] - u[1]) / hg, (ue[1] - u[1]) / he}};
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (!(std::abs(det) > 1e-12)) {
      res.note = "singular score derivative";
      return res;
    }
    double dg = -(J[1][1] * u[0] - J[0][1] * u[1]) / det;
    double de = -(J[0][0] * u[1] - J[1][0] * u[0]) / det;
    // Step halving until the residual shrinks.
    double lam = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      double un[2];
      U(g + lam * dg, e + lam * de, un);
      const double nn = std::max(std::abs(un[0]), std::abs(un[1]));
      if (nn < unorm) {
        g += lam * dg;
        e += lam * de;
        u[0] = un[0];
        u[1] = un[1];
        unorm = nn;
        accepted = true;
        break;
      }
      lam *= 0.5;
    }
    if (!accepted) break;
  }
  res.residual_norm = unorm;
  if (!(unorm < utol)) {
    res.note = "no root of the estimating equation within the iteration cap";
    return res;
  }

  // Sandwich variance: numeric derivative A (central differences) and the
  // empirical variance B of per-subject score contributions.
  const double hg = 1e-5 * std::max(1.0, std::abs(g));
  const double he = 1e-5 * std::max(1.0, std::abs(e));
  double up[2], um[2];
  double A[2][2];
  U(g + hg, e, up);
  U(g - hg, e, um);
  A[0][0] = (up[0] - um[0]) / (2.0 * hg);
  A[1][0] = (up[1] - um[1]) / (2.0 * hg);
  U(g, e + he, up);
  U(g, e - he, um);
  A[0][1] = (up[0] - um[0]) / (2.0 * he);
  A[1][1] = (up[1] - um[1]) / (2.0 * he);

  std::vector<std::array<double, 2>> contrib;
  score_eval(d, g, e, d.sigma2, u, &contrib);
  double B[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (const auto& ci : contrib) {
    B[0][0] += ci[0] * ci[0];
    B[0][1] += ci[0] * ci[1];
    B[1][1] += ci[1] * ci[1];
  }
  B[1][0] = B[0][1];

  const double detA = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  if (!(std::abs(detA) > 1e-12)) {
    res.note = "singular derivative at the root";
    return res;
  }
  // Ainv rows.
  const double Ai[2][2] = {{A[1][1] / detA, -A[0][1] / detA},
                           {-A[1][0] / detA, A[0][0] / detA}};
  // Var(eta_hat) = [Ainv B Ainv^T]_{22}.
  const double r0 = Ai[1][0] * B[0][0] + Ai[1][1] * B[1][0];
  const double r1 = Ai[1][0] * B[0][1] + Ai[1][1] * B[1][1];
  const double var_eta = r0 * Ai[1][0] + r1 * Ai[1][1];
  if (!(var_eta > 0.0)) {
    res.note = "sandwich variance not positive";
    return res;
  }
  res.theta_hat = -e;
  res.info = 1.0 / var_eta;
  res.z = res.theta_hat * std::sqrt(res.info);
  res.converged = true;
  return res;
}

}  // namespace enrich::fit
