#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "enrich/design/boundaries.hpp"
#include "enrich/design/events.hpp"
#include "enrich/design/selection.hpp"
#include "enrich/math/normal.hpp"
#include "enrich/math/quadrature.hpp"
#include "enrich/math/rng.hpp"
#include "support/density_checks.hpp"
#include "support/oracles.hpp"

using namespace enrich;
using namespace enrich::design;
using math::norm_cdf;
using math::norm_pdf;
using math::norm_sf;

namespace {

DesignSpec default_spec() {
  DesignSpec spec;
  const auto cal = calibrate_threshold(spec.psi, spec.delta);
  spec.zeta = cal.zeta;
  spec.info1_req = cal.info1_req;
  return spec;
}

}  // namespace

TEST_CASE("calibrate_threshold: reference, closed-form, degenerate") {
  const auto cal = calibrate_threshold(0.6, 0.5);
  CHECK(cal.zeta == doctest::Approx(0.754).epsilon(0.0015));
  CHECK(cal.info1_req == doctest::Approx(9.08).epsilon(0.0056));
  // calibration identity delta*sqrt(I) = 2*zeta
  CHECK(0.5 * std::sqrt(cal.info1_req) == doctest::Approx(2.0 * cal.zeta).epsilon(1e-6));

  const auto deg = calibrate_threshold(0.25, 0.7);
  CHECK(std::abs(deg.zeta) < 1e-7);

  const auto c3 = calibrate_threshold(0.81, 1.0);
  CHECK(c3.zeta == doctest::Approx(1.28155).epsilon(1e-4));
  CHECK(c3.info1_req == doctest::Approx(6.569).epsilon(2e-4));

  CHECK_THROWS_AS(calibrate_threshold(0.2, 0.5), calibration_error);
  CHECK_THROWS_AS(calibrate_threshold(0.0, 0.5), calibration_error);
}

TEST_CASE("selection_probabilities: analytic values and monte carlo") {
  const double zeta = 0.754;
  SUBCASE("global null values") {
    const auto p = selection_probabilities(ThetaConfig::global_null(), 9.08, 9.08, zeta);
    CHECK(p.none == doctest::Approx(0.600).epsilon(2e-3));
    CHECK(p.full == doctest::Approx(0.0508).epsilon(2e-2));
    CHECK(p.s1 == doctest::Approx(0.1746).epsilon(6e-3));
    CHECK(p.s2 == doctest::Approx(p.s1).epsilon(1e-12));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("alternative with calibrated design") {
    const auto cal = calibrate_threshold(0.6, 0.5);
    const auto p = selection_probabilities(ThetaConfig::alternative(0.5), cal.info1_req,
                                           cal.info1_req, cal.zeta);
    CHECK(p.s1 == doctest::Approx(0.600).epsilon(2e-3));
    CHECK(p.full == doctest::Approx(p.none).epsilon(2e-3));
  }
  SUBCASE("both effects huge selects full") {
    const auto p = selection_probabilities({5.0, 5.0}, 9.0, 9.0, zeta);
    CHECK(p.full > 0.999999);
  }
  SUBCASE("monte carlo oracle") {
    const ThetaConfig theta = ThetaConfig::alternative(0.5);
    const double i1 = 9.1, i2 = 12.0;
    const auto p = selection_probabilities(theta, i1, i2, zeta);
    math::RngStream rng(7, 0);
    const long N = 1000000;
    long counts[4] = {0, 0, 0, 0};
    for (long i = 0; i < N; ++i) {
      const double z1 = theta.theta1 * std::sqrt(i1) + rng.normal();
      const double z2 = theta.theta2 * std::sqrt(i2) + rng.normal();
      const bool s1 = z1 > zeta, s2 = z2 > zeta;
      ++counts[s1 && s2 ? 2 : (s1 ? 0 : (s2 ? 1 : 3))];
    }
    const double probs[4] = {p.s1, p.s2, p.full, p.none};
    for (int k = 0; k < 4; ++k) {
      const double phat = static_cast<double>(counts[k]) / N;
      const double se = std::sqrt(probs[k] * (1 - probs[k]) / N);
      CHECK(std::abs(phat - probs[k]) < 3.0 * se);
    }
  }
}

TEST_CASE("joint_density_subgroup: formula, support, normalization") {
  const double zeta = 0.754;
  const ThetaConfig null_theta = ThetaConfig::global_null();
  CHECK(joint_density_subgroup(zeta - 0.1, Group::s1, null_theta, 9.08, 9.08, zeta) == 0.0);
  // Direct evaluation at z = 1 under the global null.
  const double v = joint_density_subgroup(1.0, Group::s1, null_theta, 9.08, 9.08, zeta);
  CHECK(v == doctest::Approx(norm_cdf(zeta) * norm_pdf(1.0)).epsilon(1e-12));
  CHECK(v == doctest::Approx(0.18743).epsilon(2e-4));

  const auto p = selection_probabilities(null_theta, 9.08, 9.08, zeta);
  const double mass = math::integrate(
      [&](double z) {
        return joint_density_subgroup(z, Group::s1, null_theta, 9.08, 9.08, zeta);
      },
      zeta, math::kInf, 1e-10);
  CHECK(mass == doctest::Approx(p.s1).epsilon(1e-6));
}

TEST_CASE("joint_density_full: support, normalization, closed form vs quadrature") {
  const double zeta = 0.754, lambda = 1.0 / 3.0;
  const double i1 = 9.1, i2 = 18.2;
  const ThetaConfig theta = ThetaConfig::alternative(0.5);
  const double lo = full_support_lo(i1, i2, lambda, zeta);
  CHECK(joint_density_full(lo - 1e-9, theta, i1, i2, lambda, zeta) == 0.0);
  CHECK(joint_density_full(lo - 0.5, theta, i1, i2, lambda, zeta) == 0.0);

  const auto p = selection_probabilities(theta, i1, i2, zeta);
  const double mass = math::integrate(
      [&](double z) { return joint_density_full(z, theta, i1, i2, lambda, zeta); }, lo,
      math::kInf, 1e-10);
  CHECK(mass == doctest::Approx(p.full).epsilon(1e-6));

  // Closed form against the explicit convolution integral.
  const double infoF = InfoState::combine_full(i1, i2, lambda);
  const double c1 = lambda * std::sqrt(infoF / i1);
  const double c2 = (1 - lambda) * std::sqrt(infoF / i2);
  const double mu1 = theta.theta1 * std::sqrt(i1), mu2 = theta.theta2 * std::sqrt(i2);
  for (double z : {lo + 0.05, lo + 0.5, 1.9, 2.6, 4.0}) {
    auto integrand = [&](double u) {
      return norm_pdf((u - c1 * mu1) / c1) / c1 * norm_pdf((z - u - c2 * mu2) / c2) / c2;
    };
    const double direct = math::integrate(integrand, c1 * zeta, z - c2 * zeta, 1e-12);
    CHECK(joint_density_full(z, theta, i1, i2, lambda, zeta) ==
          doctest::Approx(direct).epsilon(1e-9));
  }

  // Exchange symmetry at lambda = 1/2 with equal information.
  for (double z : {1.2, 1.8, 2.5}) {
    const double a = joint_density_full(z, {0.3, 0.7}, 10.0, 10.0, 0.5, zeta);
    const double b = joint_density_full(z, {0.7, 0.3}, 10.0, 10.0, 0.5, zeta);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("joint densities: chi-square against sampling oracle") {
  const double zeta = 0.754, lambda = 1.0 / 3.0;
  const double i1 = 9.1, i2 = 18.2;
  const long N = 1000000;
  for (bool alternative : {false, true}) {
    const ThetaConfig theta =
        alternative ? ThetaConfig::alternative(0.5) : ThetaConfig::global_null();
    const double mu1 = theta.theta1 * std::sqrt(i1), mu2 = theta.theta2 * std::sqrt(i2);
    const double infoF = InfoState::combine_full(i1, i2, lambda);
    const double c1 = lambda * std::sqrt(infoF / i1);
    const double c2 = (1 - lambda) * std::sqrt(infoF / i2);
    std::vector<double> zf, z1sel;
    math::RngStream rng(31 + alternative, 5);
    for (long i = 0; i < N; ++i) {
      const double z1 = mu1 + rng.normal();
      const double z2 = mu2 + rng.normal();
      if (z1 > zeta && z2 > zeta) zf.push_back(c1 * z1 + c2 * z2);
      if (z1 > zeta && z2 <= zeta) z1sel.push_back(z1);
    }
    const auto probs = selection_probabilities(theta, i1, i2, zeta);

    const double loF = full_support_lo(i1, i2, lambda, zeta);
    auto binF = [&](double a, double b) {
      return math::integrate(
          [&](double z) { return joint_density_full(z, theta, i1, i2, lambda, zeta); },
          a, std::isinf(b) ? math::kInf : b, 1e-9);
    };
    const auto gofF = checks::chi_square_gof(zf, loF, 6.0, binF, probs.full);
    INFO("full-branch chi2 = ", gofF.chi2, " df = ", gofF.df);
    CHECK(gofF.pvalue > 0.001);

    auto bin1 = [&](double a, double b) {
      return math::integrate(
          [&](double z) {
            return joint_density_subgroup(z, Group::s1, theta, i1, i2, zeta);
          },
          a, std::isinf(b) ? math::kInf : b, 1e-9);
    };
    const auto gof1 = checks::chi_square_gof(z1sel, zeta, 5.0, bin1, probs.s1);
    INFO("s1-branch chi2 = ", gof1.chi2, " df = ", gof1.df);
    CHECK(gof1.pvalue > 0.001);
  }
}

TEST_CASE("stage2_tail: symmetric point, degenerate limit, marginal recovery") {
  CHECK(stage2_tail(0.0, 5.0, 10.0, 0.0, 0.0, TailSide::upper) == doctest::Approx(0.5));

  // Degenerate limit: conditional variance -> 0, tail -> step at z1.
  const double z1 = 1.3;
  CHECK(stage2_tail(0.2, 5.0, 5.0 * (1 + 1e-10), z1, z1 - 0.01, TailSide::upper) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(stage2_tail(0.2, 5.0, 5.0 * (1 + 1e-10), z1, z1 + 0.01, TailSide::upper) ==
        doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(stage2_tail(0.1, 5.0, 4.0, 0.0, 0.0, TailSide::upper),
                  std::invalid_argument);

  // Integrating the conditional tail against the stage-1 marginal recovers
  // the stage-2 marginal for any configuration.
  const double theta = 0.35, i1 = 7.0, i2 = 19.0, c = 1.7;
  const double marginal = math::integrate(
      [&](double z) {
        return norm_pdf(z - theta * std::sqrt(i1)) *
               stage2_tail(theta, i1, i2, z, c, TailSide::upper);
      },
      -math::kInf, math::kInf, 1e-10);
  CHECK(marginal == doctest::Approx(norm_sf(c - theta * std::sqrt(i2))).epsilon(1e-6));
}

TEST_CASE("spend: quadratic split with clamping") {
  const auto s = spend(0.025, 0.1, 5.0, 10.0, 10.0);
  CHECK(s.alpha1 == doctest::Approx(0.025 * 0.25));
  CHECK(s.alpha1 == doctest::Approx(0.00625));
  CHECK(s.alpha1 + s.alpha2 == doctest::Approx(0.025));
  CHECK(s.beta1 == doctest::Approx(0.1 * 0.25));

  // Overshoot clamps at the full budget.
  const auto s2 = spend(0.025, 0.1, 8.0, 14.0, 10.0);
  CHECK(s2.alpha1 + s2.alpha2 == doctest::Approx(0.025));
  CHECK(s2.alpha2 >= 0.0);

  const auto s3 = spend(0.025, 0.1, 0.0, 10.0, 10.0);
  CHECK(s3.alpha1 == 0.0);
  CHECK(s3.beta1 == 0.0);
}

TEST_CASE("solve_stage1_boundaries: monotonicity, sentinel, monte carlo oracle") {
  DesignSpec spec = default_spec();
  StageOneInfo info{9.099, 18.2, 0.0};
  info.infoF = InfoState::combine_full(info.info1, info.info2, spec.lambda);

  const auto b_small = solve_stage1_boundaries(0.005, 0.02, spec, info);
  const auto b_big = solve_stage1_boundaries(0.010, 0.02, spec, info);
  CHECK(b_big.b1 < b_small.b1);  // doubling the alpha spend lowers b1

  const auto b_beta = solve_stage1_boundaries(0.005, 0.04, spec, info);
  CHECK(b_beta.a1 > b_small.a1);  // larger beta spend raises a1

  const auto b_nofut = solve_stage1_boundaries(0.005, 0.0, spec, info);
  CHECK(std::isinf(b_nofut.a1));
  CHECK(b_nofut.a1 < 0);

  CHECK_THROWS_AS(solve_stage1_boundaries(0.9, 0.02, spec, info), infeasible_spend_error);

  // Monte carlo: rejection at stage 1 under the global null equals alpha1.
  const double alpha1 = 0.0116, beta1 = 0.04;
  const auto bb = solve_stage1_boundaries(alpha1, beta1, spec, info);
  const double c1 = spec.lambda * std::sqrt(info.infoF / info.info1);
  const double c2 = (1 - spec.lambda) * std::sqrt(info.infoF / info.info2);
  math::RngStream rng(99, 3);
  const long N = 1000000;
  long rejects = 0;
  for (long i = 0; i < N; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const bool s1 = z1 > spec.zeta, s2 = z2 > spec.zeta;
    if (!s1 && !s2) continue;
    const double zsel = s1 && s2 ? c1 * z1 + c2 * z2 : (s1 ? z1 : z2);
    if (zsel > bb.b1) ++rejects;
  }
  const double phat = static_cast<double>(rejects) / N;
  const double se = std::sqrt(alpha1 * (1 - alpha1) / N);
  CHECK(std::abs(phat - alpha1) < 3.0 * se);
}

TEST_CASE("solve_stage2_boundaries: two-stage null rejection equals the spend") {
  DesignSpec spec = default_spec();
  StageOneInfo info1{9.099, 18.2, 0.0};
  info1.infoF = InfoState::combine_full(info1.info1, info1.info2, spec.lambda);
  StageTwoInfo info2{40.0, 40.0, 40.0};

  const double alpha1 = 0.0116, beta1 = 0.0466, alpha2 = 0.0134, beta2 = 0.0534;
  const auto s1b = solve_stage1_boundaries(alpha1, beta1, spec, info1);
  const auto s2b =
      solve_stage2_boundaries(alpha2, beta2, spec, info1, info2, s1b.a1, s1b.b1);
  CHECK(std::isfinite(s2b.b2));

  // Path simulation under the global null with the canonical joint law.
  const double c1 = spec.lambda * std::sqrt(info1.infoF / info1.info1);
  const double c2 = (1 - spec.lambda) * std::sqrt(info1.infoF / info1.info2);
  math::RngStream rng(11, 17);
  const long N = 1000000;
  long rejects = 0;
  for (long i = 0; i < N; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const bool s1 = z1 > spec.zeta, s2 = z2 > spec.zeta;
    if (!s1 && !s2) continue;
    const double i1 = s1 && s2 ? info1.infoF : (s1 ? info1.info1 : info1.info2);
    const double i2v = s1 && s2 ? info2.infoF : (s1 ? info2.info1 : info2.info2);
    const double zsel = s1 && s2 ? c1 * z1 + c2 * z2 : (s1 ? z1 : z2);
    if (zsel > s1b.b1) {
      ++rejects;
      continue;
    }
    if (zsel <= s1b.a1) continue;
    const double ratio = std::sqrt(i1 / i2v);
    const double znew = ratio * zsel + std::sqrt(1 - i1 / i2v) * rng.normal();
    if (znew > s2b.b2) ++rejects;
  }
  const double total = alpha1 + alpha2;
  const double phat = static_cast<double>(rejects) / N;
  const double se = std::sqrt(total * (1 - total) / N);
  CHECK(std::abs(phat - total) < 3.0 * se);

  // The efficacy bound is monotone in the spend.
  const auto s2c =
      solve_stage2_boundaries(2 * alpha2, beta2, spec, info1, info2, s1b.a1, s1b.b1);
  CHECK(s2c.b2 < s2b.b2);

  // Spending the whole continuation mass sends b2 to the open sentinel.
  const auto s2d =
      solve_stage2_boundaries(0.9, beta2, spec, info1, info2, s1b.a1, s1b.b1);
  CHECK(std::isinf(s2d.b2));
  CHECK(s2d.b2 < 0);
}

TEST_CASE("find_imax: defining property, monotonicity, event totals") {
  DesignSpec spec = default_spec();
  EventsPlan plan;
  plan.m1 = plan.m2 = plan.mF = 41.0 / spec.info1_req;
  plan_events(spec, plan);
  CHECK(plan.d1_stage1 == 41);
  CHECK(plan.d2_stage1 == 82);
  CHECK(plan.dF_stage1 == 123);

  const double imax = find_imax(spec, plan);
  plan.i_max = imax;
  finalize_events(plan);

  // Back-substitution: the final bounds meet.
  const auto seq = planned_sequences(plan, spec.lambda, imax);
  const auto sp = spend(spec.alpha, spec.beta, seq.stage1.infoF, seq.stage2.infoF, imax);
  const auto s1b = solve_stage1_boundaries(sp.alpha1, sp.beta1, spec, seq.stage1);
  const auto s2b = solve_stage2_boundaries(sp.alpha2, sp.beta2, spec, seq.stage1,
                                           seq.stage2, s1b.a1, s1b.b1);
  CHECK(std::abs(s2b.a2 - s2b.b2) < 1e-5);

  // Tighter power requirement needs more information.
  DesignSpec strict = spec;
  strict.beta = 0.05;
  const double imax_strict = find_imax(strict, plan);
  CHECK(imax_strict > imax);

  // Planned totals stay in the expected range for the reference scenario.
  CHECK(plan.d_total > 150);
  CHECK(plan.d_total < 210);
}

TEST_CASE("predict_info: proportionality") {
  CHECK(predict_info(9.08, 41, 180) == doctest::Approx(9.08 * 180.0 / 41.0).epsilon(1e-12));
  CHECK(predict_info(9.08, 41, 180) == doctest::Approx(39.86).epsilon(2e-3));
  CHECK(predict_info(7.7, 50, 50) == doctest::Approx(7.7));
  CHECK_THROWS_AS(predict_info(9.0, 0, 100), std::invalid_argument);
}

TEST_CASE("plan_events: prevalence ratios") {
  DesignSpec spec = default_spec();
  spec.lambda = 0.5;
  EventsPlan plan;
  plan.m1 = plan.m2 = plan.mF = 4.0;
  plan_events(spec, plan);
  CHECK(plan.d1_stage1 == plan.d2_stage1);
}
