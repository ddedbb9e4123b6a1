#pragma once

#include "enrich/design/types.hpp"

namespace enrich::design {

// Solves P(select S1) = psi and P(select F) = P(select nothing) under the
// design alternative (theta1 = delta, theta2 = 0) for the threshold zeta and
// the required stage-1 information in S1. Solved as a 2-d root problem and
// cross-checked internally against the closed form zeta = Phi^-1(sqrt(psi)),
// info = (2 zeta / delta)^2.
struct ThresholdCalibration {
  double zeta;
  double info1_req;
};
ThresholdCalibration calibrate_threshold(double psi, double delta);

// Probabilities of the four selection outcomes at the first analysis, from
// the independent stage-1 statistics Z_j ~ N(theta_j sqrt(info_j), 1).
struct SelectionProbs {
  double s1 = 0.0, s2 = 0.0, full = 0.0, none = 0.0;
  double sum() const { return s1 + s2 + full + none; }
};
SelectionProbs selection_probabilities(const ThetaConfig& theta, double info1,
                                       double info2, double zeta);

// Joint density of (Z_W, W = w) for a subgroup selection (w in {s1, s2}):
// the untruncated normal density of Z_w times the probability the other
// statistic stays at or below zeta; zero for z <= zeta.
double joint_density_subgroup(double z, Group w, const ThetaConfig& theta,
                              double info1, double info2, double zeta);

// Joint density of (Z_F, F): the law of c1 Z1 + c2 Z2 restricted to
// {Z1 > zeta, Z2 > zeta}, with c_j the information-combination weights
// (c1^2 + c2^2 = 1). The convolution over the S1 contribution reduces to a
// closed normal-cdf form; support is z > (c1 + c2) zeta.
double joint_density_full(double z, const ThetaConfig& theta, double info1,
                          double info2, double lambda, double zeta);

// Lower edge of the full-selection density support.
double full_support_lo(double info1, double info2, double lambda, double zeta);

enum class TailSide { upper, lower };

// P(Z2 > threshold | Z1 = z1) (or the lower tail) for one group's pair of
// standardized statistics across the two analyses:
// Z2 | Z1 ~ N(theta sqrt(I2) + sqrt(I1/I2) (z1 - theta sqrt(I1)), 1 - I1/I2).
double stage2_tail(double theta_w, double info_w1, double info_w2, double z1,
                   double threshold, TailSide side);

}  // namespace enrich::design
