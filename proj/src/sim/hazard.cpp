#include "enrich/sim/hazard.hpp"

#include <cmath>

#include "enrich/math/root.hpp"

namespace enrich::sim {

namespace {

// (exp(x t) - 1) / x, stable near x = 0.
double expm1_over(double x, double t) {
  const double xt = x * t;
  if (std::abs(xt) < 1e-8) return t * (1.0 + 0.5 * xt + xt * xt / 6.0);
  return std::expm1(xt) / x;
}

}  // namespace

double hazard_rate(double t, double b0, double slope_eff, int arm,
                   const GroupParams& p) {
  const double base = t <= 1.0 ? p.c : 5.0 * p.c / 3.0;
  return base * std::exp(p.gamma * (b0 + slope_eff * t) + p.eta * arm);
}

double cumulative_hazard(double t, double b0, double slope_eff, int arm,
                         const GroupParams& p) {
  if (t <= 0.0) return 0.0;
  const double x = p.gamma * slope_eff;
  const double scale = std::exp(p.gamma * b0 + p.eta * arm);
  if (t <= 1.0) return p.c * scale * expm1_over(x, t);
  const double h1 = p.c * scale * expm1_over(x, 1.0);
  // Integral of (5c/3) exp(x s) over (1, t] = (5c/3) e^x (e^{x(t-1)} - 1)/x.
  const double tail = (5.0 * p.c / 3.0) * scale * std::exp(x) * expm1_over(x, t - 1.0);
  return h1 + tail;
}

EventDraw sample_event_time(double b0, double slope_eff, int arm,
                            const GroupParams& p, double exp_draw,
                            double horizon) {
  EventDraw out{horizon, true};
  if (cumulative_hazard(horizon, b0, slope_eff, arm, p) < exp_draw) return out;
  double hi = 1.0;
  while (cumulative_hazard(hi, b0, slope_eff, arm, p) < exp_draw) hi = std::min(hi * 2.0, horizon);
  auto g = [&](double t) { return cumulative_hazard(t, b0, slope_eff, arm, p) - exp_draw; };
  out.time = math::find_root(g, 0.0, hi, 1e-12);
  out.capped = false;
  return out;
}

}  // namespace enrich::sim
