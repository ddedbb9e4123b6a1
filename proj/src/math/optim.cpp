#include "enrich/math/optim.hpp"

#include <algorithm>
#include <cmath>

namespace enrich::math {

namespace {

double finite_or_throw(double v, const char* where) {
  if (!std::isfinite(v)) throw derivative_error(where);
  return v;
}

}  // namespace

std::vector<double> numeric_gradient(const ObjectiveFn& f,
                                     const std::vector<double>& x,
                                     double rel_step) {
  const size_t p = x.size();
  std::vector<double> g(p), xp(x);
  for (size_t i = 0; i < p; ++i) {
    double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    double fp = finite_or_throw(f(xp), "numeric_gradient: non-finite evaluation");
    xp[i] = x[i] - h;
    double fm = finite_or_throw(f(xp), "numeric_gradient: non-finite evaluation");
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::vector<std::vector<double>> numeric_jacobian(const VectorFn& f,
                                                  const std::vector<double>& x,
                                                  double rel_step) {
  const size_t p = x.size();
  std::vector<double> xp(x);
  std::vector<std::vector<double>> cols(p);
  size_t q = 0;
  for (size_t i = 0; i < p; ++i) {
    double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    std::vector<double> fp = f(xp);
    xp[i] = x[i] - h;
    std::vector<double> fm = f(xp);
    xp[i] = x[i];
    q = fp.size();
    cols[i].resize(q);
    for (size_t r = 0; r < q; ++r) {
      double v = (fp[r] - fm[r]) / (2.0 * h);
      cols[i][r] = finite_or_throw(v, "numeric_jacobian: non-finite evaluation");
    }
  }
  std::vector<std::vector<double>> jac(q, std::vector<double>(p));
  for (size_t r = 0; r < q; ++r)
    for (size_t i = 0; i < p; ++i) jac[r][i] = cols[i][r];
  return jac;
}

std::vector<std::vector<double>> numeric_hessian(const ObjectiveFn& f,
                                                 const std::vector<double>& x,
                                                 double rel_step) {
  const size_t p = x.size();
  std::vector<double> h(p);
  for (size_t i = 0; i < p; ++i) h[i] = rel_step * std::max(1.0, std::abs(x[i]));
  std::vector<std::vector<double>> hess(p, std::vector<double>(p, 0.0));
  std::vector<double> xp(x);
  const double f0 = finite_or_throw(f(x), "numeric_hessian: non-finite evaluation");
  for (size_t i = 0; i < p; ++i) {
    xp[i] = x[i] + h[i];
    double fpi = f(xp);
    xp[i] = x[i] - h[i];
    double fmi = f(xp);
    xp[i] = x[i];
    hess[i][i] = finite_or_throw((fpi - 2.0 * f0 + fmi) / (h[i] * h[i]),
                                 "numeric_hessian: non-finite evaluation");
    for (size_t j = i + 1; j < p; ++j) {
      xp[i] = x[i] + h[i]; xp[j] = x[j] + h[j];
      double fpp = f(xp);
      xp[j] = x[j] - h[j];
      double fpm = f(xp);
      xp[i] = x[i] - h[i]; xp[j] = x[j] + h[j];
      double fmp = f(xp);
      xp[j] = x[j] - h[j];
      double fmm = f(xp);
      xp[i] = x[i]; xp[j] = x[j];
      double v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
      finite_or_throw(v, "numeric_hessian: non-finite evaluation");
      hess[i][j] = v;
      hess[j][i] = v;  // symmetrized by construction
    }
  }
  return hess;
}

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Coordinate-wise pattern search; polls +/- steps along each axis and halves
// the step vector until nothing improves.
bool pattern_search(const ObjectiveFn& f, std::vector<double>& x, double& fx,
                    int budget) {
  const size_t p = x.size();
  std::vector<double> step(p);
  for (size_t i = 0; i < p; ++i) step[i] = 0.1 * std::max(1.0, std::abs(x[i]));
  bool improved_any = false;
  for (int round = 0; round < budget; ++round) {
    bool improved = false;
    for (size_t i = 0; i < p; ++i) {
      for (double sgn : {+1.0, -1.0}) {
        std::vector<double> xt(x);
        xt[i] += sgn * step[i];
        double ft = f(xt);
        if (std::isfinite(ft) && ft < fx) {
          x = xt;
          fx = ft;
          improved = true;
          improved_any = true;
          break;
        }
      }
    }
    if (!improved) {
      double maxstep = inf_norm(step);
      if (maxstep < 1e-10) break;
      for (double& s : step) s *= 0.5;
    }
  }
  return improved_any;
}

}  // namespace

MinimizeResult minimize(const ObjectiveFn& f, std::vector<double> x0,
                        const MinimizeOptions& options) {
  const size_t p = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  if (!std::isfinite(res.value))
    throw std::invalid_argument("minimize: objective not finite at x0");

  // Inverse Hessian estimate, started at identity.
  std::vector<std::vector<double>> Hinv(p, std::vector<double>(p, 0.0));
  for (size_t i = 0; i < p; ++i) Hinv[i][i] = 1.0;

  // Gradient probes near a cliff in the objective can step into non-finite
  // territory; fall back to the derivative-free rescue instead of aborting.
  int stalls = 0;
  auto guarded_gradient = [&](const std::vector<double>& x,
                              std::vector<double>& out) -> bool {
    try {
      out = numeric_gradient(f, x, options.fd_step);
      return true;
    } catch (const derivative_error&) {
      return false;
    }
  };

  std::vector<double> g(p, 0.0);
  if (!guarded_gradient(res.x, g)) {
    double fx = res.value;
    pattern_search(f, res.x, fx, 80);
    res.value = fx;
    if (!guarded_gradient(res.x, g)) return res;  // converged stays false
  }
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    res.grad_norm = inf_norm(g);
    if (res.grad_norm < options.grad_tol) {
      res.converged = true;
      return res;
    }
    // Direction d = -Hinv * g
    std::vector<double> d(p, 0.0);
    for (size_t i = 0; i < p; ++i)
      for (size_t j = 0; j < p; ++j) d[i] -= Hinv[i][j] * g[j];
    double slope = 0.0;
    for (size_t i = 0; i < p; ++i) slope += d[i] * g[i];
    if (!(slope < 0.0)) {
      // Reset to steepest descent when curvature information went bad.
      for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j) Hinv[i][j] = (i == j) ? 1.0 : 0.0;
      for (size_t i = 0; i < p; ++i) d[i] = -g[i];
      slope = -inf_norm(g);
    }
    // Near an exponential cliff the gradient can be astronomically large;
    // cap the proposal so backtracking stays able to reach sane territory.
    const double dn = inf_norm(d);
    if (dn > options.max_step) {
      const double scale = options.max_step / dn;
      for (double& di : d) di *= scale;
      slope *= scale;
    }

    // Armijo backtracking.
    double t = 1.0;
    bool ls_ok = false;
    std::vector<double> xn(p);
    double fn = res.value;
    for (int ls = 0; ls < 40; ++ls) {
      for (size_t i = 0; i < p; ++i) xn[i] = res.x[i] + t * d[i];
      fn = f(xn);
      if (std::isfinite(fn) && fn <= res.value + 1e-4 * t * slope) {
        ls_ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ls_ok) {
      // Derivative-free rescue, then rebuild curvature from scratch.
      double fx = res.value;
      bool moved = pattern_search(f, res.x, fx, 60);
      res.value = fx;
      if (!moved && ++stalls >= 2) break;
      for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j) Hinv[i][j] = (i == j) ? 1.0 : 0.0;
      if (!guarded_gradient(res.x, g)) break;
      continue;
    }

    std::vector<double> gn(p, 0.0);
    if (!guarded_gradient(xn, gn)) {
      // Accept the step but rebuild from a safe footing.
      res.x = xn;
      res.value = fn;
      double fx = res.value;
      pattern_search(f, res.x, fx, 60);
      res.value = fx;
      for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j) Hinv[i][j] = (i == j) ? 1.0 : 0.0;
      if (!guarded_gradient(res.x, g)) break;
      continue;
    }
    std::vector<double> s(p), y(p);
    double sy = 0.0, step_norm = 0.0;
    for (size_t i = 0; i < p; ++i) {
      s[i] = xn[i] - res.x[i];
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
      step_norm = std::max(step_norm, std::abs(s[i]));
    }
    if (sy > 1e-12) {
      // BFGS update of Hinv.
      double rho = 1.0 / sy;
      std::vector<double> Hy(p, 0.0);
      for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j) Hy[i] += Hinv[i][j] * y[j];
      double yHy = 0.0;
      for (size_t i = 0; i < p; ++i) yHy += y[i] * Hy[i];
      for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < p; ++j)
          Hinv[i][j] += (1.0 + rho * yHy) * rho * s[i] * s[j] -
                        rho * (Hy[i] * s[j] + s[i] * Hy[j]);
    }
    res.x = xn;
    res.value = fn;
    g = gn;
    if (step_norm < options.step_tol) {
      res.grad_norm = inf_norm(g);
      res.converged = res.grad_norm < options.grad_tol * 100;
      return res;
    }
  }
  res.grad_norm = inf_norm(g);
  res.converged = res.grad_norm < options.grad_tol;
  return res;
}

}  // namespace enrich::math
