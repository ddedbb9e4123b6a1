#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace enrich::design {

// Analysis populations. Subgroup 1 is the one assumed to benefit under the
// design alternative.
enum class Group { s1 = 0, s2 = 1, full = 2 };

inline const char* group_name(Group g) {
  switch (g) {
    case Group::s1: return "S1";
    case Group::s2: return "S2";
    default: return "F";
  }
}

class calibration_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class infeasible_spend_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class search_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Standardized treatment effects on the benefit scale (positive = treatment
// better). Survival-model effects map through theta = -eta. The full
// population effect is always derived, never stored.
struct ThetaConfig {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta_full(double lambda) const {
    return lambda * theta1 + (1.0 - lambda) * theta2;
  }
  static ThetaConfig global_null() { return {0.0, 0.0}; }
  static ThetaConfig alternative(double delta) { return {delta, 0.0}; }
};

// Design-stage constants. Two analyses, two subgroups.
struct DesignSpec {
  double psi = 0.6;       // target P(select S1) under the alternative
  double delta = 0.5;     // planned standardized benefit in S1
  double lambda = 1.0 / 3.0;  // prevalence of S1 in F
  double alpha = 0.025;   // one-sided familywise type-1 budget
  double beta = 0.10;     // type-2 budget
  double zeta = std::numeric_limits<double>::quiet_NaN();       // selection threshold
  double info1_req = std::numeric_limits<double>::quiet_NaN();  // required stage-1 information in S1
  static constexpr int num_analyses = 2;

  void validate() const {
    if (!(psi > 0.0 && psi < 1.0)) throw std::invalid_argument("DesignSpec: psi outside (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("DesignSpec: alpha outside (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("DesignSpec: beta outside (0,1)");
    if (!(delta > 0.0)) throw std::invalid_argument("DesignSpec: delta must be > 0");
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("DesignSpec: lambda outside (0,1)");
    if (!std::isfinite(zeta)) throw std::invalid_argument("DesignSpec: zeta not calibrated");
    if (!(info1_req > 0.0)) throw std::invalid_argument("DesignSpec: info1_req must be > 0");
  }
};

// Information and event counts per group and analysis. The full-population
// information equals the lambda combination whenever both subgroup levels
// are observed; predicted entries carry observed = false.
struct GroupInfo {
  double info = 0.0;
  double events = 0.0;
  bool observed = false;
};

struct InfoState {
  GroupInfo at[3][2];  // [group][analysis-1]

  GroupInfo& get(Group g, int analysis) { return at[static_cast<int>(g)][analysis - 1]; }
  const GroupInfo& get(Group g, int analysis) const { return at[static_cast<int>(g)][analysis - 1]; }

  static double combine_full(double info1, double info2, double lambda) {
    return 1.0 / (lambda * lambda / info1 + (1.0 - lambda) * (1.0 - lambda) / info2);
  }
};

// Z-scale stopping boundaries and the error spent at each analysis.
// a1 < b1; at the final analysis a2 == b2 once the alpha-priority rule has
// been applied.
struct Boundaries {
  double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
  double alpha1 = 0.0, alpha2 = 0.0, beta1 = 0.0, beta2 = 0.0;
};

// Events-per-information constants and the planned event counts derived
// from them.
struct EventsPlan {
  double m1 = 0.0, m2 = 0.0, mF = 0.0;
  long d1_stage1 = 0;        // planned events in S1 triggering analysis 1
  long d2_stage1 = 0;        // expected events in S2 at analysis 1
  long dF_stage1 = 0;        // expected events in F at analysis 1
  long d_total = 0;          // planned events in the selected group at analysis 2
  double i_max = 0.0;        // maximum full-population information
  double r2[3] = {0.0, 0.0, 0.0};   // fit quality of the through-origin events~info fits
  int dropped[3] = {0, 0, 0};       // calibration snapshots dropped per group
};

}  // namespace enrich::design
