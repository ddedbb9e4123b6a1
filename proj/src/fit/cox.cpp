#include <algorithm>
#include <cmath>

#include "enrich/fit/engines.hpp"

namespace enrich::fit {

namespace {

struct Obs {
  double time;
  bool event;
  int arm;
  int id;
};

}  // namespace

AnalysisResult fit_cox(const sim::GroupSnapshot& snap, design::Group group,
                       int analysis) {
  AnalysisResult res;
  res.method = Method::cox;
  res.group = group;
  res.analysis = analysis;

  std::vector<Obs> obs;
  obs.reserve(snap.subjects.size());
  long events_by_arm[2] = {0, 0};
  for (const auto& s : snap.subjects) {
    obs.push_back({s.obs_time, s.event, s.arm, s.id});
    if (s.event) ++events_by_arm[s.arm];
  }
  if (events_by_arm[0] == 0 || events_by_arm[1] == 0) {
    res.note = "non-identifiable: events missing in one arm";
    return res;
  }
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.id < b.id;
  });

  // Arm is binary, so risk sets reduce to two counts swept from the right;
  // Breslow handling keeps all tied events against the same risk set.
  auto score_info = [&](double eta, double* score, double* info) {
    const double e = std::exp(eta);
    double n1 = 0.0, n0 = 0.0;  // at-risk counts per arm
    double u = 0.0, j = 0.0;
    size_t i = obs.size();
    size_t k = obs.size();
    while (k > 0) {
      // Pull in everyone with time >= current tie group.
      const double t = obs[k - 1].time;
      while (i > 0 && obs[i - 1].time >= t) {
        (obs[i - 1].arm ? n1 : n0) += 1.0;
        --i;
      }
      const double denom = n0 + n1 * e;
      const double eb = n1 * e / denom;
      while (k > 0 && obs[k - 1].time == t) {
        if (obs[k - 1].event) {
          u += obs[k - 1].arm - eb;
          j += eb * (1.0 - eb);
        }
        --k;
      }
    }
    *score = u;
    *info = j;
  };

  double eta = 0.0;
  double u = 0.0, j = 0.0;
  bool ok = false;
  for (int it = 0; it < 60; ++it) {
    score_info(eta, &u, &j);
    res.iterations = it + 1;
    if (!(j > 1e-12)) break;
    double step = u / j;
    step = std::clamp(step, -2.0, 2.0);
    eta += step;
    if (std::abs(step) < 1e-12 || std::abs(u) < 1e-12) {
      ok = true;
      break;
    }
  }
  score_info(eta, &u, &j);
  res.residual_norm = std::abs(u);
  if (!ok && res.residual_norm > 1e-8) {
    res.note = "newton did not converge";
    return res;
  }
  if (!(j > 0.0)) {
    res.note = "non-identifiable: zero observed information";
    return res;
  }
  res.theta_hat = -eta;
  res.info = j;
  res.z = res.theta_hat * std::sqrt(res.info);
  res.converged = true;
  return res;
}

}  // namespace enrich::fit
