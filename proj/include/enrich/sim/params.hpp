#pragma once

#include <cmath>
#include <stdexcept>

namespace enrich::sim {

// Joint-model parameters for one subgroup: a linear latent biomarker
// trajectory X(t) = b0 + (b1 + b2 Z) t observed with N(0, sigma2) error, and
// a proportional-hazards event model h(t) = h0(t) exp(gamma X(t) + eta Z)
// with a piecewise-constant baseline that steps from c to 5c/3 at t = 1.
struct GroupParams {
  double mu0 = 4.23;    // mean random intercept
  double mu1 = 1.81;    // mean random slope
  double phi1 = 2.5;    // Var(b0)
  double phi12 = 1.7;   // Cov(b0, b1)
  double phi2 = 5.0;    // Var(b1)
  double sigma2 = 1.0;  // measurement-error variance
  double gamma = 0.8;   // association between trajectory and hazard
  double eta = 0.0;     // direct treatment log-hazard effect
  double b2 = 0.0;      // treatment-by-time effect on the trajectory
  double c = 0.0085;    // baseline hazard level on t <= 1

  bool covariance_psd() const {
    return phi1 >= 0.0 && phi2 >= 0.0 && phi1 * phi2 - phi12 * phi12 >= -1e-12;
  }
  void validate() const {
    if (!covariance_psd())
      throw std::invalid_argument("GroupParams: random-effect covariance not PSD");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("GroupParams: sigma2 < 0");
    if (!(c > 0.0)) throw std::invalid_argument("GroupParams: baseline level c <= 0");
  }
};

struct JointModelParams {
  GroupParams group[2];
  double lambda = 1.0 / 3.0;           // prevalence of subgroup 1
  double censor_rate_per_day = 5e-5;   // independent loss to follow-up

  double censor_rate_per_year() const { return censor_rate_per_day * 365.25; }
  void validate() const {
    group[0].validate();
    group[1].validate();
    if (!(lambda > 0.0 && lambda < 1.0))
      throw std::invalid_argument("JointModelParams: lambda outside (0,1)");
    if (!(censor_rate_per_day > 0.0))
      throw std::invalid_argument("JointModelParams: censor rate <= 0");
  }
};

// A data-generation scenario: model parameters plus accrual settings.
struct Scenario {
  JointModelParams params;
  int n_max = 400;
  double accrual_rate = 200.0;  // subjects per year

  double accrual_span() const { return n_max / accrual_rate; }

  // All treatment effects zero.
  static Scenario global_null() { return Scenario{}; }

  // Subgroup 1 benefits: eta1 = -0.5 and b2_1 = -0.5; subgroup 2 unaffected.
  static Scenario alternative() {
    Scenario s;
    s.params.group[0].eta = -0.5;
    s.params.group[0].b2 = -0.5;
    return s;
  }
};

}  // namespace enrich::sim
