#pragma once

#include "enrich/sim/params.hpp"

namespace enrich::sim {

// Instantaneous hazard h(t) = h0(t) exp(gamma (b0 + slope_eff t) + eta Z)
// with slope_eff = b1 + b2 Z.
double hazard_rate(double t, double b0, double slope_eff, int arm,
                   const GroupParams& p);

// Exact integral of the hazard: piecewise exponential-in-t with the baseline
// step at t = 1; a series branch keeps it stable for |gamma * slope| ~ 0.
double cumulative_hazard(double t, double b0, double slope_eff, int arm,
                         const GroupParams& p);

struct EventDraw {
  double time;
  bool capped;  // H never reached the exponential draw before the horizon
};

// Inverse-transform event time: solves H(T) = e for a unit-exponential draw
// e by bracketed root-finding, capped at the administrative horizon.
EventDraw sample_event_time(double b0, double slope_eff, int arm,
                            const GroupParams& p, double exp_draw,
                            double horizon = 50.0);

}  // namespace enrich::sim
