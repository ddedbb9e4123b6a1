#include "enrich/fit/rmst.hpp"

#include <algorithm>
#include <cmath>

#include "enrich/fit/longitudinal.hpp"
#include "enrich/math/optim.hpp"
#include "enrich/math/quadrature.hpp"
#include "enrich/sim/hazard.hpp"

namespace enrich::fit {

namespace {

constexpr double kVarFloor = 1e-10;

struct GhGrid {
  std::vector<double> x;   // sqrt(2) * nodes
  std::vector<double> lw;  // log(w / sqrt(pi))
};

GhGrid gh_grid(int n) {
  auto rule = math::gauss_hermite(n);
  GhGrid g;
  g.x.resize(n);
  g.lw.resize(n);
  const double lsp = 0.5 * std::log(M_PI);
  for (int i = 0; i < n; ++i) {
    g.x[i] = std::sqrt(2.0) * rule.nodes[i];
    g.lw[i] = std::log(rule.weights[i]) - lsp;
  }
  return g;
}

// Sufficient statistics of one subject's measurement series plus its
// survival record; the longitudinal log-density is then a quadratic form in
// (b0, B) evaluated in O(1) per quadrature node.
struct SubjectSuff {
  int m = 0;
  double sv = 0, sv2 = 0, sw = 0, swv = 0, sw2 = 0;
  double time = 0;
  bool event = false;
  int arm = 0;
};

std::vector<SubjectSuff> make_suff(const sim::GroupSnapshot& snap) {
  std::vector<SubjectSuff> out;
  out.reserve(snap.subjects.size());
  for (const auto& s : snap.subjects) {
    SubjectSuff u;
    u.m = static_cast<int>(s.visit_times.size());
    for (int k = 0; k < u.m; ++k) {
      const double v = s.visit_times[k], w = s.values[k];
      u.sv += v;
      u.sv2 += v * v;
      u.sw += w;
      u.swv += w * v;
      u.sw2 += w * w;
    }
    u.time = s.obs_time;
    u.event = s.event;
    u.arm = s.arm;
    out.push_back(u);
  }
  return out;
}

struct Chol {
  double l11, l21, l22;
  bool ok;
};

Chol chol2(double phi1, double phi12, double phi2) {
  Chol c{0, 0, 0, false};
  if (!(phi1 > 0.0)) return c;
  c.l11 = std::sqrt(phi1);
  c.l21 = phi12 / c.l11;
  const double rest = phi2 - c.l21 * c.l21;
  if (!(rest > 0.0)) return c;
  c.l22 = std::sqrt(rest);
  c.ok = true;
  return c;
}

// The longitudinal factor is Gaussian in (b0, B), so it integrates against
// the random-effect prior in closed form, leaving the survival factor to be
// averaged under the Gaussian posterior of (b0, B). Quadrature nodes then
// sit where the mass is, and the tensor rule converges fast regardless of
// how informative the measurement series is.
double loglik_suff(const sim::GroupParams& gp, const std::vector<SubjectSuff>& subj,
                   const GhGrid& gh) {
  const double phi1 = gp.phi1, phi12 = gp.phi12, phi2 = gp.phi2;
  const double det_prior = phi1 * phi2 - phi12 * phi12;
  if (!(det_prior > 0.0) || !(phi1 > 0.0)) return -std::numeric_limits<double>::infinity();
  const double sigma2 = std::max(gp.sigma2, kVarFloor);
  const int n = static_cast<int>(gh.x.size());
  // Prior precision of (b0, B); the treatment shift moves the mean only.
  const double q11 = phi2 / det_prior;
  const double q12 = -phi12 / det_prior;
  const double q22 = phi1 / det_prior;

  double total = 0.0;
  std::vector<double> terms;
  terms.reserve(n * n);
  for (const auto& u : subj) {
    const double mu0 = gp.mu0;
    const double muB = gp.mu1 + gp.b2 * u.arm;
    // Posterior precision P = Q + M / sigma2 and mean from the normal
    // equations.
    const double p11 = q11 + u.m / sigma2;
    const double p12 = q12 + u.sv / sigma2;
    const double p22 = q22 + u.sv2 / sigma2;
    const double det_post = p11 * p22 - p12 * p12;
    if (!(det_post > 0.0)) return -std::numeric_limits<double>::infinity();
    const double r0 = q11 * mu0 + q12 * muB + u.sw / sigma2;
    const double r1 = q12 * mu0 + q22 * muB + u.swv / sigma2;
    const double post0 = (p22 * r0 - p12 * r1) / det_post;
    const double post1 = (p11 * r1 - p12 * r0) / det_post;
    double marginal = 0.0;
    if (u.m > 0) {
      const double prior_quad =
          q11 * mu0 * mu0 + 2.0 * q12 * mu0 * muB + q22 * muB * muB;
      const double post_quad = post0 * r0 + post1 * r1;  // mu_post^T P mu_post
      marginal = -0.5 * (u.m * std::log(2.0 * M_PI * sigma2) +
                         std::log(det_prior * det_post) + u.sw2 / sigma2 +
                         prior_quad - post_quad);
    }
    // Cholesky of the posterior covariance P^{-1}.
    const double c11 = std::sqrt(p22 / det_post);
    const double c21 = -p12 / det_post / c11;
    const double c22v = p11 / det_post - c21 * c21;
    const double c22 = std::sqrt(std::max(c22v, 1e-300));

    terms.clear();
    double best = -std::numeric_limits<double>::infinity();
    const double log_base =
        std::log(u.time <= 1.0 ? gp.c : 5.0 * gp.c / 3.0) + gp.eta * u.arm;
    for (int p = 0; p < n; ++p) {
      const double b0 = post0 + c11 * gh.x[p];
      for (int q = 0; q < n; ++q) {
        const double B = post1 + c21 * gh.x[p] + c22 * gh.x[q];
        double g = gh.lw[p] + gh.lw[q];
        g -= sim::cumulative_hazard(u.time, b0, B, u.arm, gp);
        // Log hazard assembled directly so extreme parameters stay finite.
        if (u.event) g += log_base + gp.gamma * (b0 + B * u.time);
        terms.push_back(g);
        if (g > best) best = g;
      }
    }
    if (!(best > -std::numeric_limits<double>::infinity()))
      return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    total += marginal + best + std::log(acc);
  }
  return total;
}

}  // namespace

double joint_log_likelihood(const sim::GroupParams& gp,
                            const sim::GroupSnapshot& snap, int gh_nodes) {
  return loglik_suff(gp, make_suff(snap), gh_grid(gh_nodes));
}

double rmst_difference(const sim::GroupParams& gp, double t_star, int gh_nodes) {
  if (!(t_star > 0.0)) throw std::invalid_argument("rmst_difference: t_star must be > 0");
  const GhGrid gh = gh_grid(gh_nodes);
  const Chol L = chol2(std::max(gp.phi1, kVarFloor), gp.phi12,
                       std::max(gp.phi2, kVarFloor));
  if (!L.ok) return std::numeric_limits<double>::quiet_NaN();
  const int n = static_cast<int>(gh.x.size());

  auto survival_diff = [&](double t) {
    double s1 = 0.0, s0 = 0.0;
    for (int p = 0; p < n; ++p) {
      const double b0 = gp.mu0 + L.l11 * gh.x[p];
      const double wp = std::exp(gh.lw[p]);
      for (int q = 0; q < n; ++q) {
        const double b1 = gp.mu1 + L.l21 * gh.x[p] + L.l22 * gh.x[q];
        const double w = wp * std::exp(gh.lw[q]);
        s0 += w * std::exp(-sim::cumulative_hazard(t, b0, b1, 0, gp));
        s1 += w * std::exp(-sim::cumulative_hazard(t, b0, b1 + gp.b2, 1, gp));
      }
    }
    return s1 - s0;
  };

  static const math::QuadratureRule rule = math::gauss_legendre(40);
  // Split at the baseline-hazard step.
  if (t_star <= 1.0) return math::fixed_legendre(survival_diff, 0.0, t_star, rule);
  return math::fixed_legendre(survival_diff, 0.0, 1.0, rule) +
         math::fixed_legendre(survival_diff, 1.0, t_star, rule);
}

std::vector<double> rmst_encode(const sim::GroupParams& gp) {
  const double phi1 = std::max(gp.phi1, 1e-6);
  const double phi2 = std::max(gp.phi2, 1e-6);
  double rho = gp.phi12 / std::sqrt(phi1 * phi2);
  rho = std::clamp(rho, -0.99, 0.99);
  return {gp.mu0,
          gp.mu1,
          std::log(phi1),
          std::atanh(rho),
          std::log(phi2),
          std::log(std::max(gp.sigma2, 1e-8)),
          gp.gamma,
          gp.eta,
          gp.b2,
          std::log(std::max(gp.c, 1e-10))};
}

sim::GroupParams rmst_decode(const std::vector<double>& x) {
  sim::GroupParams gp;
  gp.mu0 = x[0];
  gp.mu1 = x[1];
  gp.phi1 = std::exp(std::clamp(x[2], -30.0, 30.0));
  const double rho = std::tanh(x[3]);
  gp.phi2 = std::exp(std::clamp(x[4], -30.0, 30.0));
  gp.phi12 = rho * std::sqrt(gp.phi1 * gp.phi2);
  gp.sigma2 = std::exp(std::clamp(x[5], -40.0, 30.0));
  gp.gamma = x[6];
  gp.eta = x[7];
  gp.b2 = x[8];
  gp.c = std::exp(std::clamp(x[9], -40.0, 10.0));
  return gp;
}

namespace {

// Cholesky of a dense symmetric matrix; false when not positive definite.
bool chol_decompose(std::vector<std::vector<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i; j < n; ++j) {
      double sum = a[i][j];
      for (size_t k = 0; k < i; ++k) sum -= a[i][k] * a[j][k];
      if (i == j) {
        if (!(sum > 0.0)) return false;
        a[i][i] = std::sqrt(sum);
      } else {
        a[j][i] = sum / a[i][i];
      }
    }
  }
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) a[i][j] = 0.0;
  return true;
}

std::vector<double> chol_solve(const std::vector<std::vector<double>>& l,
                               std::vector<double> b) {
  const size_t n = l.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    b[i] /= l[i][i];
  }
  for (size_t i = n; i-- > 0;) {
    for (size_t k = i + 1; k < n; ++k) b[i] -= l[k][i] * b[k];
    b[i] /= l[i][i];
  }
  return b;
}

sim::GroupParams starting_values(const sim::GroupSnapshot& snap) {
  sim::GroupParams gp;
  std::vector<double> icepts, slopes;
  double rss = 0.0;
  long dof = 0;
  double exposure = 0.0;
  long events = 0;
  for (const auto& s : snap.subjects) {
    if (auto f = fit_full_line(s.visit_times, s.values)) {
      icepts.push_back(f->intercept);
      slopes.push_back(f->slope);
      if (f->m > 2) {
        rss += f->rss;
        dof += f->m - 2;
      }
    }
    exposure += s.obs_time;
    events += s.event ? 1 : 0;
  }
  auto mean_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / v.size();
  };
  const double mi = mean_of(icepts), ms = mean_of(slopes);
  double v1 = 0.0, v2 = 0.0, cv = 0.0;
  for (size_t i = 0; i < icepts.size(); ++i) {
    v1 += (icepts[i] - mi) * (icepts[i] - mi);
    v2 += (slopes[i] - ms) * (slopes[i] - ms);
    cv += (icepts[i] - mi) * (slopes[i] - ms);
  }
  const double k = icepts.size() > 1 ? icepts.size() - 1.0 : 1.0;
  gp.mu0 = mi;
  gp.mu1 = ms;
  gp.phi1 = std::max(v1 / k, 0.05);
  gp.phi2 = std::max(v2 / k, 0.05);
  double rho = cv / k / std::sqrt(gp.phi1 * gp.phi2);
  gp.phi12 = std::clamp(rho, -0.9, 0.9) * std::sqrt(gp.phi1 * gp.phi2);
  gp.sigma2 = dof > 0 ? std::max(rss / dof, 1e-4) : 1e-4;
  gp.gamma = 0.0;
  gp.eta = 0.0;
  gp.b2 = 0.0;
  gp.c = exposure > 0.0 ? std::max(1e-6, events / exposure) : 1e-3;
  return gp;
}

}  // namespace

AnalysisResult fit_rmst(const sim::GroupSnapshot& snap, design::Group group,
                        int analysis, double t_star, int gh_nodes) {
  AnalysisResult res;
  res.method = Method::rmst;
  res.group = group;
  res.analysis = analysis;

  const auto suff = make_suff(snap);
  const GhGrid gh = gh_grid(gh_nodes);
  auto negll = [&](const std::vector<double>& x) {
    return -loglik_suff(rmst_decode(x), suff, gh);
  };

  math::MinimizeOptions opt;
  opt.max_iterations = 600;
  opt.grad_tol = 1e-4;
  math::MinimizeResult mle;
  try {
    mle = math::minimize(negll, rmst_encode(starting_values(snap)), opt);
  } catch (const std::exception& ex) {
    res.note = std::string("likelihood optimization failed: ") + ex.what();
    return res;
  }
  res.iterations = mle.iterations;
  res.residual_norm = mle.grad_norm;
  if (!mle.converged) {
    res.note = "likelihood optimization did not converge";
    return res;
  }

  std::vector<std::vector<double>> hess;
  try {
    hess = math::numeric_hessian(negll, mle.x, 1e-4);
  } catch (const std::exception& ex) {
    res.note = std::string("hessian evaluation failed: ") + ex.what();
    return res;
  }
  auto L = hess;
  if (!chol_decompose(L)) {
    res.note = "observed information not positive definite";
    return res;
  }

  const sim::GroupParams psi = rmst_decode(mle.x);
  const double delta = rmst_difference(psi, t_star, gh_nodes);
  if (!std::isfinite(delta)) {
    res.note = "rmst difference not finite at the mle";
    return res;
  }

  // Delta method on the transformed coordinates: matching gradient and
  // covariance parameterizations keeps the variance invariant.
  std::vector<double> grad(mle.x.size());
  std::vector<double> xp = mle.x;
  for (size_t i = 0; i < mle.x.size(); ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(mle.x[i]));
    xp[i] = mle.x[i] + h;
    const double dp = rmst_difference(rmst_decode(xp), t_star, gh_nodes);
    xp[i] = mle.x[i] - h;
    const double dm = rmst_difference(rmst_decode(xp), t_star, gh_nodes);
    xp[i] = mle.x[i];
    grad[i] = (dp - dm) / (2.0 * h);
  }
  const std::vector<double> sg = chol_solve(L, grad);
  double var = 0.0;
  for (size_t i = 0; i < grad.size(); ++i) var += grad[i] * sg[i];
  if (!(var > 0.0)) {
    res.note = "delta-method variance not positive";
    return res;
  }
  res.theta_hat = delta;
  res.info = 1.0 / var;
  res.z = res.theta_hat * std::sqrt(res.info);
  res.converged = true;
  return res;
}

}  // namespace enrich::fit
