#pragma once

#include <array>
#include <limits>

#include "enrich/design/selection.hpp"
#include "enrich/design/types.hpp"

namespace enrich::design {

inline constexpr double kNoFutilityBound = -std::numeric_limits<double>::infinity();
inline constexpr double kNoEfficacyBound = std::numeric_limits<double>::infinity();

// Quadratic error-spending split. t_k = min(infoF_k / i_max, 1); the stage-1
// spends use f(t1), stage-2 spends take the increment up to f(t2).
struct SpendSplit {
  double alpha1 = 0.0, alpha2 = 0.0, beta1 = 0.0, beta2 = 0.0;
};
SpendSplit spend(double alpha, double beta, double infoF1, double infoF2, double i_max);
double spend_fraction(double info, double i_max);  // clamped t

// Stage-1 information for the three analysis populations; the full entry
// must satisfy the lambda combination of the subgroup entries.
struct StageOneInfo {
  double info1 = 0.0, info2 = 0.0, infoF = 0.0;
};

// Per-branch stage-2 information on the path where that branch is the
// selected population (events in the selected group reach the common total).
struct StageTwoInfo {
  double info1 = 0.0, info2 = 0.0, infoF = 0.0;
  double of(Group g) const {
    return g == Group::s1 ? info1 : (g == Group::s2 ? info2 : infoF);
  }
};

// Joint stage-1 law of (W, Z_W) for a fixed parameter configuration:
// densities, selection-truncated tails and masses per branch.
class StageOneLaw {
 public:
  StageOneLaw(const ThetaConfig& theta, const StageOneInfo& info, double lambda,
              double zeta);

  double density(Group w, double z) const;
  double support_lo(Group w) const;
  double select_prob(Group w) const;
  double select_any() const;
  // Integral of the branch density above b / below a.
  double tail_above(Group w, double b) const;
  double mass_below(Group w, double a) const;

  double zeta() const { return zeta_; }
  const StageOneInfo& info() const { return info_; }
  const ThetaConfig& theta() const { return theta_; }
  double lambda() const { return lambda_; }

 private:
  ThetaConfig theta_;
  StageOneInfo info_;
  double lambda_, zeta_;
  double mu1_, mu2_;        // subgroup statistic means
  double c1_, c2_;          // full-population combination weights
  SelectionProbs probs_;
};

// Solves the stage-1 boundary pair. b1 spends alpha1 across all three
// selection branches under the global null; a1 spends beta1 through the S1
// branch under the design alternative. beta1 == 0 returns the no-futility
// sentinel.
struct StageOneBoundaries {
  double a1, b1;
};
StageOneBoundaries solve_stage1_boundaries(double alpha1, double beta1,
                                           const DesignSpec& spec,
                                           const StageOneInfo& info);

// Solves the final-analysis pair from the double integrals over the
// continuation region (a1, b1]. Returns the raw alpha- and beta-driven
// bounds; at K = 2 callers enforce a2 = b2 with alpha priority.
struct StageTwoBoundaries {
  double a2, b2;
};
StageTwoBoundaries solve_stage2_boundaries(double alpha2, double beta2,
                                           const DesignSpec& spec,
                                           const StageOneInfo& info1,
                                           const StageTwoInfo& info2,
                                           double a1, double b1);

// Planned information sequences from the events-per-information constants:
// stage 1 at the planned event counts, stage 2 on each branch's own
// selected path with i_max as the full-population target.
struct PlannedSequences {
  StageOneInfo stage1;
  StageTwoInfo stage2;
};
PlannedSequences planned_sequences(const EventsPlan& plan, double lambda, double i_max);

// Searches for the maximum information level at which the final boundaries
// meet (a2 == b2) on the planned sequences. Bisection with bracket
// expansion; throws search_error when no crossing exists.
double find_imax(const DesignSpec& spec, const EventsPlan& plan);

// Fully solved design at fixed information levels: boundaries plus spends.
Boundaries solve_boundaries(const DesignSpec& spec, const StageOneInfo& info1,
                            const StageTwoInfo& info2, double i_max,
                            bool enforce_final_equality = true);

}  // namespace enrich::design
