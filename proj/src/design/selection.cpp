#include "enrich/design/selection.hpp"

#include <cmath>

#include "enrich/math/normal.hpp"
#include "enrich/math/optim.hpp"

namespace enrich::design {

using math::norm_cdf;
using math::norm_pdf;
using math::norm_quantile;
using math::norm_sf;

ThresholdCalibration calibrate_threshold(double psi, double delta) {
  if (!(psi > 0.0 && psi < 1.0)) throw calibration_error("calibrate_threshold: psi outside (0,1)");
  if (!(delta > 0.0)) throw calibration_error("calibrate_threshold: delta must be > 0");
  if (psi < 0.25)
    throw calibration_error(
        "calibrate_threshold: no solution with nonnegative information (psi < 0.25)");

  // Closed form: the two equations force P(Z1 > zeta) + P(Z2 > zeta-shift).. = 1
  // which reduces to Phi(zeta) = sqrt(psi) and delta sqrt(info) = 2 zeta.
  const double zeta_cf = norm_quantile(std::sqrt(psi));
  const double s_cf = 2.0 * zeta_cf / delta;  // sqrt(info)

  // Independent numeric solve of the simultaneous equations in (zeta, s).
  auto equations = [&](const std::vector<double>& x) {
    double zeta = x[0], s = x[1];
    double p1 = norm_sf(zeta - delta * s);
    double p2 = norm_sf(zeta);
    return std::vector<double>{p1 * (1.0 - p2) - psi, p1 + p2 - 1.0};
  };
  std::vector<double> x = {0.5, std::max(0.5, s_cf)};
  for (int it = 0; it < 60; ++it) {
    auto fx = equations(x);
    double resid = std::max(std::abs(fx[0]), std::abs(fx[1]));
    if (resid < 1e-12) break;
    auto J = math::numeric_jacobian(equations, x, 1e-7);
    double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (std::abs(det) < 1e-14) throw calibration_error("calibrate_threshold: singular system");
    double dx0 = (J[1][1] * fx[0] - J[0][1] * fx[1]) / det;
    double dx1 = (J[0][0] * fx[1] - J[1][0] * fx[0]) / det;
    x[0] -= dx0;
    x[1] -= dx1;
  }
  auto fx = equations(x);
  if (std::max(std::abs(fx[0]), std::abs(fx[1])) > 1e-8)
    throw calibration_error("calibrate_threshold: numeric solve did not converge");
  if (std::abs(x[0] - zeta_cf) > 1e-6 || std::abs(x[1] - s_cf) > 1e-6)
    throw calibration_error("calibrate_threshold: numeric solve disagrees with closed form");

  ThresholdCalibration out;
  out.zeta = x[0];
  out.info1_req = x[1] * x[1];
  return out;
}

SelectionProbs selection_probabilities(const ThetaConfig& theta, double info1,
                                       double info2, double zeta) {
  if (!(info1 > 0.0 && info2 > 0.0))
    throw std::invalid_argument("selection_probabilities: information must be > 0");
  const double p1 = norm_sf(zeta - theta.theta1 * std::sqrt(info1));
  const double p2 = norm_sf(zeta - theta.theta2 * std::sqrt(info2));
  SelectionProbs sp;
  sp.s1 = p1 * (1.0 - p2);
  sp.s2 = (1.0 - p1) * p2;
  sp.full = p1 * p2;
  sp.none = (1.0 - p1) * (1.0 - p2);
  return sp;
}

double joint_density_subgroup(double z, Group w, const ThetaConfig& theta,
                              double info1, double info2, double zeta) {
  if (!(info1 > 0.0 && info2 > 0.0))
    throw std::invalid_argument("joint_density_subgroup: information must be > 0");
  if (w != Group::s1 && w != Group::s2)
    throw std::invalid_argument("joint_density_subgroup: w must be a subgroup");
  if (z <= zeta) return 0.0;
  const double mu1 = theta.theta1 * std::sqrt(info1);
  const double mu2 = theta.theta2 * std::sqrt(info2);
  const double mu_w = (w == Group::s1) ? mu1 : mu2;
  const double mu_o = (w == Group::s1) ? mu2 : mu1;
  return norm_cdf(zeta - mu_o) * norm_pdf(z - mu_w);
}

namespace {

struct FullCoeffs {
  double c1, c2, mu1, mu2;
};

FullCoeffs full_coeffs(const ThetaConfig& theta, double info1, double info2,
                       double lambda) {
  const double infoF = InfoState::combine_full(info1, info2, lambda);
  FullCoeffs fc;
  fc.c1 = lambda * std::sqrt(infoF / info1);
  fc.c2 = (1.0 - lambda) * std::sqrt(infoF / info2);
  fc.mu1 = theta.theta1 * std::sqrt(info1);
  fc.mu2 = theta.theta2 * std::sqrt(info2);
  return fc;
}

}  // namespace

double full_support_lo(double info1, double info2, double lambda, double zeta) {
  auto fc = full_coeffs(ThetaConfig{}, info1, info2, lambda);
  return (fc.c1 + fc.c2) * zeta;
}

double joint_density_full(double z, const ThetaConfig& theta, double info1,
                          double info2, double lambda, double zeta) {
  if (!(info1 > 0.0 && info2 > 0.0))
    throw std::invalid_argument("joint_density_full: information must be > 0");
  const auto fc = full_coeffs(theta, info1, info2, lambda);
  if (z <= (fc.c1 + fc.c2) * zeta) return 0.0;
  // Z_F = c1 Z1 + c2 Z2 over the region {Z1 > zeta, Z2 > zeta}. Writing
  // u = c1 Z1, the convolution integrand is a product of normal densities in
  // u, so the u-integral over (c1 zeta, z - c2 zeta) collapses to a normal
  // cdf difference around the conditional mean m(z).
  const double a1 = fc.c1 * fc.mu1, v1 = fc.c1 * fc.c1;
  const double a2 = fc.c2 * fc.mu2, v2 = fc.c2 * fc.c2;
  const double vz = v1 + v2;  // equals 1 by the information combination
  const double m = a1 + v1 / vz * (z - a1 - a2);
  const double cv = v1 * v2 / vz;
  const double sd = std::sqrt(cv);
  const double lo = (fc.c1 * zeta - m) / sd;
  const double hi = (z - fc.c2 * zeta - m) / sd;
  if (hi <= lo) return 0.0;
  const double marginal = norm_pdf((z - a1 - a2) / std::sqrt(vz)) / std::sqrt(vz);
  return marginal * (norm_cdf(hi) - norm_cdf(lo));
}

double stage2_tail(double theta_w, double info_w1, double info_w2, double z1,
                   double threshold, TailSide side) {
  if (!(info_w1 > 0.0) || !(info_w2 > info_w1))
    throw std::invalid_argument("stage2_tail: requires info_w2 > info_w1 > 0");
  const double r = std::sqrt(info_w1 / info_w2);
  const double mean = theta_w * std::sqrt(info_w2) + r * (z1 - theta_w * std::sqrt(info_w1));
  const double sd = std::sqrt(1.0 - info_w1 / info_w2);
  const double t = (threshold - mean) / sd;
  return side == TailSide::upper ? norm_sf(t) : norm_cdf(t);
}

}  // namespace enrich::design
