#include <algorithm>
#include <cmath>

#include "enrich/fit/engines.hpp"

namespace enrich::fit {

namespace {

struct TvcSubject {
  double time;
  bool event;
  int arm;
  int id;
  const std::vector<double>* visits;
  const std::vector<double>* values;

  // Last observation carried forward; quiet NaN when no visit precedes t.
  double covariate_at(double t) const {
    auto it = std::upper_bound(visits->begin(), visits->end(), t + 1e-12);
    if (it == visits->begin()) return std::numeric_limits<double>::quiet_NaN();
    return (*values)[static_cast<size_t>(it - visits->begin()) - 1];
  }
};

struct Fit2D {
  double gamma = 0.0, eta = 0.0;
  double var_eta = 0.0;
  bool ok = false;
  int iterations = 0;
  double resid = 0.0;
  const char* note = "";
};

Fit2D solve_tvc(const std::vector<TvcSubject>& obs, bool fix_gamma) {
  Fit2D fit;

  // Score and observed information over all event times; the risk set at t
  // keeps subjects with time >= t and a covariate value available at t.
  auto eval = [&](double g, double e, double u[2], double jmat[2][2]) {
    u[0] = u[1] = 0.0;
    jmat[0][0] = jmat[0][1] = jmat[1][0] = jmat[1][1] = 0.0;
    for (const auto& ev : obs) {
      if (!ev.event) continue;
      const double t = ev.time;
      const double w_fail = ev.covariate_at(t);
      if (std::isnan(w_fail)) continue;  // failing subject outside its own risk set
      double s0 = 0.0, s1w = 0.0, s1z = 0.0, sww = 0.0, swz = 0.0, szz = 0.0;
      for (const auto& r : obs) {
        if (r.time < t - 1e-15) continue;
        const double w = r.covariate_at(t);
        if (std::isnan(w)) continue;
        const double wt = std::exp(g * w + e * r.arm);
        s0 += wt;
        s1w += wt * w;
        s1z += wt * r.arm;
        sww += wt * w * w;
        swz += wt * w * r.arm;
        szz += wt * r.arm * r.arm;
      }
      if (!(s0 > 0.0)) continue;
      const double ew = s1w / s0, ez = s1z / s0;
      u[0] += w_fail - ew;
      u[1] += ev.arm - ez;
      jmat[0][0] += sww / s0 - ew * ew;
      jmat[0][1] += swz / s0 - ew * ez;
      jmat[1][0] = jmat[0][1];
      jmat[1][1] += szz / s0 - ez * ez;
    }
  };

  double g = 0.0, e = 0.0;
  double u[2], J[2][2];
  for (int it = 0; it < 80; ++it) {
    eval(g, e, u, J);
    fit.iterations = it + 1;
    double dg = 0.0, de = 0.0;
    if (fix_gamma) {
      if (!(J[1][1] > 1e-12)) {
        fit.note = "non-identifiable";
        return fit;
      }
      de = u[1] / J[1][1];
    } else {
      const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
      if (!(std::abs(det) > 1e-12)) {
        fit.note = "non-identifiable: collinear covariates";
        return fit;
      }
      dg = (J[1][1] * u[0] - J[0][1] * u[1]) / det;
      de = (J[0][0] * u[1] - J[1][0] * u[0]) / det;
    }
    dg = std::clamp(dg, -1.0, 1.0);
    de = std::clamp(de, -2.0, 2.0);
    g += fix_gamma ? 0.0 : dg;
    e += de;
    const double unorm = std::max(std::abs(u[0]) * (fix_gamma ? 0.0 : 1.0), std::abs(u[1]));
    if (unorm < 1e-10 && std::max(std::abs(dg), std::abs(de)) < 1e-10) break;
  }
  eval(g, e, u, J);
  fit.resid = std::max(fix_gamma ? 0.0 : std::abs(u[0]), std::abs(u[1]));
  if (fit.resid > 1e-6) {
    fit.note = "newton did not converge";
    return fit;
  }
  if (fix_gamma) {
    if (!(J[1][1] > 0.0)) {
      fit.note = "non-identifiable";
      return fit;
    }
    fit.var_eta = 1.0 / J[1][1];
  } else {
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (!(det > 0.0) || !(J[0][0] > 0.0)) {
      fit.note = "information not positive definite";
      return fit;
    }
    // (2,2) element of the inverse information.
    fit.var_eta = J[0][0] / det;
  }
  fit.gamma = g;
  fit.eta = e;
  fit.ok = true;
  return fit;
}

AnalysisResult run_tvc(const sim::GroupSnapshot& snap, design::Group group,
                       int analysis, bool fix_gamma) {
  AnalysisResult res;
  res.method = Method::cox_tvc;
  res.group = group;
  res.analysis = analysis;

  std::vector<TvcSubject> obs;
  obs.reserve(snap.subjects.size());
  long events_by_arm[2] = {0, 0};
  for (const auto& s : snap.subjects) {
    obs.push_back({s.obs_time, s.event, s.arm, s.id, &s.visit_times, &s.values});
    if (s.event) ++events_by_arm[s.arm];
  }
  if (events_by_arm[0] == 0 || events_by_arm[1] == 0) {
    res.note = "non-identifiable: events missing in one arm";
    return res;
  }
  const Fit2D fit = solve_tvc(obs, fix_gamma);
  res.iterations = fit.iterations;
  res.residual_norm = fit.resid;
  if (!fit.ok) {
    res.note = fit.note;
    return res;
  }
  res.theta_hat = -fit.eta;
  res.info = 1.0 / fit.var_eta;
  res.z = res.theta_hat * std::sqrt(res.info);
  res.converged = true;
  return res;
}

}  // namespace

AnalysisResult fit_cox_tvc(const sim::GroupSnapshot& snap, design::Group group,
                           int analysis) {
  return run_tvc(snap, group, analysis, false);
}

AnalysisResult fit_cox_tvc_fixed_gamma(const sim::GroupSnapshot& snap,
                                       design::Group group, int analysis) {
  return run_tvc(snap, group, analysis, true);
}

}  // namespace enrich::fit
