#include "enrich/design/boundaries.hpp"

#include <algorithm>
#include <cmath>

#include "enrich/math/normal.hpp"
#include "enrich/math/quadrature.hpp"
#include "enrich/math/root.hpp"

namespace enrich::design {

using math::norm_cdf;
using math::norm_pdf;
using math::norm_sf;

double spend_fraction(double info, double i_max) {
  if (!(i_max > 0.0)) throw std::invalid_argument("spend: i_max must be > 0");
  if (info <= 0.0) return 0.0;
  return std::min(info / i_max, 1.0);
}

SpendSplit spend(double alpha, double beta, double infoF1, double infoF2, double i_max) {
  const double t1 = spend_fraction(infoF1, i_max);
  const double t2 = std::max(t1, spend_fraction(infoF2, i_max));
  SpendSplit s;
  s.alpha1 = alpha * t1 * t1;
  s.alpha2 = alpha * t2 * t2 - s.alpha1;
  s.beta1 = beta * t1 * t1;
  s.beta2 = beta * t2 * t2 - s.beta1;
  return s;
}

StageOneLaw::StageOneLaw(const ThetaConfig& theta, const StageOneInfo& info,
                         double lambda, double zeta)
    : theta_(theta), info_(info), lambda_(lambda), zeta_(zeta) {
  if (!(info.info1 > 0.0 && info.info2 > 0.0 && info.infoF > 0.0))
    throw std::invalid_argument("StageOneLaw: information must be > 0");
  mu1_ = theta.theta1 * std::sqrt(info.info1);
  mu2_ = theta.theta2 * std::sqrt(info.info2);
  c1_ = lambda * std::sqrt(info.infoF / info.info1);
  c2_ = (1.0 - lambda) * std::sqrt(info.infoF / info.info2);
  probs_ = selection_probabilities(theta, info.info1, info.info2, zeta);
}

double StageOneLaw::support_lo(Group w) const {
  return w == Group::full ? (c1_ + c2_) * zeta_ : zeta_;
}

double StageOneLaw::select_prob(Group w) const {
  switch (w) {
    case Group::s1: return probs_.s1;
    case Group::s2: return probs_.s2;
    default: return probs_.full;
  }
}

double StageOneLaw::select_any() const { return 1.0 - probs_.none; }

double StageOneLaw::density(Group w, double z) const {
  if (w == Group::full)
    return joint_density_full(z, theta_, info_.info1, info_.info2, lambda_, zeta_);
  return joint_density_subgroup(z, w, theta_, info_.info1, info_.info2, zeta_);
}

double StageOneLaw::tail_above(Group w, double b) const {
  if (w != Group::full) {
    const double mu_w = (w == Group::s1) ? mu1_ : mu2_;
    const double mu_o = (w == Group::s1) ? mu2_ : mu1_;
    const double lo = std::max(b, zeta_);
    return norm_cdf(zeta_ - mu_o) * norm_sf(lo - mu_w);
  }
  // P(Z1 > zeta, Z2 > zeta, c1 Z1 + c2 Z2 > b): one smooth integral over the
  // S1 statistic with the double truncation folded into the inner bound.
  if (b <= support_lo(w)) return probs_.full;
  auto integrand = [&](double z1) {
    const double inner = std::max(zeta_, (b - c1_ * z1) / c2_);
    return norm_pdf(z1 - mu1_) * norm_sf(inner - mu2_);
  };
  return math::integrate(integrand, zeta_, math::kInf, 1e-11);
}

double StageOneLaw::mass_below(Group w, double a) const {
  if (w != Group::full) {
    const double mu_w = (w == Group::s1) ? mu1_ : mu2_;
    const double mu_o = (w == Group::s1) ? mu2_ : mu1_;
    if (a <= zeta_) return 0.0;
    return norm_cdf(zeta_ - mu_o) * (norm_cdf(a - mu_w) - norm_cdf(zeta_ - mu_w));
  }
  return select_prob(w) - tail_above(w, a);
}

namespace {

// Continuation-region integrals Integral f(z,w) * tail(z) dz on fixed
// Legendre nodes; densities are cached so boundary root-finding reuses them.
class StageTwoIntegrals {
 public:
  StageTwoIntegrals(const StageOneLaw& law, const StageTwoInfo& info2,
                    double a1, double b1)
      : law_(law), info2_(info2) {
    static const math::QuadratureRule rule = math::gauss_legendre(64);
    for (Group w : {Group::s1, Group::s2, Group::full}) {
      Branch br;
      br.group = w;
      const double lo = std::max(a1, law.support_lo(w));
      if (b1 > lo) {
        const double c = 0.5 * (lo + b1), h = 0.5 * (b1 - lo);
        br.nodes.reserve(rule.nodes.size());
        for (size_t i = 0; i < rule.nodes.size(); ++i) {
          Node nd;
          nd.z = c + h * rule.nodes[i];
          nd.fw = h * rule.weights[i] * law.density(w, nd.z);
          br.nodes.push_back(nd);
        }
        const double i1 = stage1_info(w);
        const double i2 = info2.of(w);
        br.ok = i2 > i1 && i1 > 0.0;
        if (br.ok) {
          br.ratio = std::sqrt(i1 / i2);
          br.sd = std::sqrt(1.0 - i1 / i2);
          br.theta_term = theta_of(w) * std::sqrt(i2) -
                          br.ratio * theta_of(w) * std::sqrt(i1);
        }
      }
      branches_[static_cast<int>(w)] = std::move(br);
    }
  }

  // Sum over all branches of the continuation mass crossing above thr at the
  // final analysis.
  double upper_mass(double thr) const {
    double total = 0.0;
    for (const auto& br : branches_) total += branch_mass(br, thr, TailSide::upper);
    return total;
  }

  // S1-branch continuation mass falling below thr.
  double lower_mass_s1(double thr) const {
    return branch_mass(branches_[0], thr, TailSide::lower);
  }

  double continuation_mass_all() const {
    double total = 0.0;
    for (const auto& br : branches_)
      for (const auto& nd : br.nodes) total += nd.fw;
    return total;
  }

  double continuation_mass_s1() const {
    double total = 0.0;
    for (const auto& nd : branches_[0].nodes) total += nd.fw;
    return total;
  }

 private:
  struct Node {
    double z, fw;
  };
  struct Branch {
    Group group = Group::s1;
    std::vector<Node> nodes;
    bool ok = false;
    double ratio = 0.0, sd = 1.0, theta_term = 0.0;
  };

  double stage1_info(Group w) const {
    const auto& i = law_.info();
    return w == Group::s1 ? i.info1 : (w == Group::s2 ? i.info2 : i.infoF);
  }
  double theta_of(Group w) const {
    const auto& th = law_.theta();
    return w == Group::s1 ? th.theta1
                          : (w == Group::s2 ? th.theta2 : th.theta_full(law_.lambda()));
  }

  double branch_mass(const Branch& br, double thr, TailSide side) const {
    if (br.nodes.empty() || !br.ok) return 0.0;
    double total = 0.0;
    for (const auto& nd : br.nodes) {
      const double mean = br.theta_term + br.ratio * nd.z;
      const double t = (thr - mean) / br.sd;
      total += nd.fw * (side == TailSide::upper ? norm_sf(t) : norm_cdf(t));
    }
    return total;
  }

  const StageOneLaw& law_;
  StageTwoInfo info2_;
  std::array<Branch, 3> branches_;
};

StageOneInfo with_combined_full(const StageOneInfo& info, double lambda) {
  StageOneInfo out = info;
  if (!(out.infoF > 0.0))
    out.infoF = InfoState::combine_full(out.info1, out.info2, lambda);
  return out;
}

}  // namespace

StageOneBoundaries solve_stage1_boundaries(double alpha1, double beta1,
                                           const DesignSpec& spec,
                                           const StageOneInfo& info_in) {
  spec.validate();
  const StageOneInfo info = with_combined_full(info_in, spec.lambda);
  const StageOneLaw null_law(ThetaConfig::global_null(), info, spec.lambda, spec.zeta);
  const StageOneLaw alt_law(ThetaConfig::alternative(spec.delta), info, spec.lambda,
                            spec.zeta);

  StageOneBoundaries out;

  // Efficacy bound from the summed selection-truncated tails under the null.
  auto total_tail = [&](double b) {
    return null_law.tail_above(Group::s1, b) + null_law.tail_above(Group::s2, b) +
           null_law.tail_above(Group::full, b);
  };
  if (alpha1 <= 0.0) {
    out.b1 = kNoEfficacyBound;
  } else {
    const double avail = null_law.select_any();
    if (alpha1 >= avail)
      throw infeasible_spend_error(
          "solve_stage1_boundaries: alpha spend exceeds the stage-1 selection mass");
    out.b1 = math::find_root([&](double b) { return total_tail(b) - alpha1; },
                             std::min(null_law.support_lo(Group::full), spec.zeta) - 1.0,
                             40.0, 1e-11);
  }

  // Futility bound through the S1 branch under the alternative.
  if (beta1 <= 0.0) {
    out.a1 = kNoFutilityBound;
  } else {
    const double avail = alt_law.select_prob(Group::s1);
    if (beta1 >= avail)
      throw infeasible_spend_error(
          "solve_stage1_boundaries: beta spend exceeds the S1 selection mass");
    out.a1 = math::find_root(
        [&](double a) { return alt_law.mass_below(Group::s1, a) - beta1; }, spec.zeta,
        40.0, 1e-11);
  }
  if (out.a1 >= out.b1)
    throw infeasible_spend_error("solve_stage1_boundaries: bounds crossed (a1 >= b1)");
  return out;
}

StageTwoBoundaries solve_stage2_boundaries(double alpha2, double beta2,
                                           const DesignSpec& spec,
                                           const StageOneInfo& info1_in,
                                           const StageTwoInfo& info2,
                                           double a1, double b1) {
  spec.validate();
  const StageOneInfo info1 = with_combined_full(info1_in, spec.lambda);
  const StageOneLaw null_law(ThetaConfig::global_null(), info1, spec.lambda, spec.zeta);
  const StageOneLaw alt_law(ThetaConfig::alternative(spec.delta), info1, spec.lambda,
                            spec.zeta);
  StageTwoIntegrals null_int(null_law, info2, a1, b1);
  StageTwoIntegrals alt_int(alt_law, info2, a1, b1);

  StageTwoBoundaries out;
  if (alpha2 <= 0.0) {
    out.b2 = kNoEfficacyBound;
  } else if (alpha2 >= null_int.continuation_mass_all()) {
    out.b2 = kNoFutilityBound;  // -inf: the whole continuation mass is spent
  } else {
    out.b2 = math::find_root([&](double b) { return null_int.upper_mass(b) - alpha2; },
                             -40.0, 40.0, 1e-11);
  }

  if (beta2 <= 0.0) {
    out.a2 = kNoFutilityBound;
  } else if (beta2 >= alt_int.continuation_mass_s1()) {
    out.a2 = kNoEfficacyBound;  // +inf: no achievable futility bound
  } else {
    out.a2 = math::find_root([&](double a) { return alt_int.lower_mass_s1(a) - beta2; },
                             -40.0, 40.0, 1e-11);
  }
  return out;
}

PlannedSequences planned_sequences(const EventsPlan& plan, double lambda, double i_max) {
  PlannedSequences seq;
  seq.stage1.info1 = plan.d1_stage1 / plan.m1;
  seq.stage1.info2 = plan.d2_stage1 / plan.m2;
  seq.stage1.infoF = InfoState::combine_full(seq.stage1.info1, seq.stage1.info2, lambda);
  seq.stage2.info1 = plan.mF * i_max / plan.m1;
  seq.stage2.info2 = plan.mF * i_max / plan.m2;
  seq.stage2.infoF = i_max;
  return seq;
}

Boundaries solve_boundaries(const DesignSpec& spec, const StageOneInfo& info1_in,
                            const StageTwoInfo& info2, double i_max,
                            bool enforce_final_equality) {
  const StageOneInfo info1 = with_combined_full(info1_in, spec.lambda);
  const SpendSplit sp = spend(spec.alpha, spec.beta, info1.infoF, info2.infoF, i_max);
  Boundaries b;
  b.alpha1 = sp.alpha1;
  b.alpha2 = sp.alpha2;
  b.beta1 = sp.beta1;
  b.beta2 = sp.beta2;
  const auto s1b = solve_stage1_boundaries(sp.alpha1, sp.beta1, spec, info1);
  b.a1 = s1b.a1;
  b.b1 = s1b.b1;
  const auto s2b =
      solve_stage2_boundaries(sp.alpha2, sp.beta2, spec, info1, info2, b.a1, b.b1);
  if (enforce_final_equality) {
    // Alpha priority at the final analysis: the efficacy bound binds.
    b.b2 = s2b.b2;
    b.a2 = s2b.b2;
  } else {
    b.a2 = s2b.a2;
    b.b2 = s2b.b2;
  }
  return b;
}

double find_imax(const DesignSpec& spec, const EventsPlan& plan) {
  spec.validate();
  if (!(plan.m1 > 0.0 && plan.m2 > 0.0 && plan.mF > 0.0))
    throw std::invalid_argument("find_imax: calibrated m constants required");
  if (plan.d1_stage1 <= 0) throw std::invalid_argument("find_imax: planned d1 required");

  const double infoF1 = planned_sequences(plan, spec.lambda, 1.0).stage1.infoF;

  auto gap = [&](double i_max) {
    const auto seq = planned_sequences(plan, spec.lambda, i_max);
    const SpendSplit sp =
        spend(spec.alpha, spec.beta, seq.stage1.infoF, seq.stage2.infoF, i_max);
    const auto s1b = solve_stage1_boundaries(sp.alpha1, sp.beta1, spec, seq.stage1);
    const auto s2b = solve_stage2_boundaries(sp.alpha2, sp.beta2, spec, seq.stage1,
                                             seq.stage2, s1b.a1, s1b.b1);
    return s2b.a2 - s2b.b2;
  };

  // The planned stage-2 level must exceed every stage-1 level.
  double lo = 1.01 * std::max({infoF1, plan.d1_stage1 / plan.mF,
                               plan.d2_stage1 / plan.mF});
  double hi = 100.0 * infoF1;
  double glo = gap(lo);
  if (glo > 0.0)
    throw search_error("find_imax: final bounds already crossed at the smallest level");
  double ghi = gap(hi);
  int expansions = 0;
  while (ghi < 0.0 && expansions < 8) {
    hi *= 2.0;
    ghi = gap(hi);
    ++expansions;
  }
  if (ghi < 0.0) throw search_error("find_imax: no sign change over the search bracket");

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = gap(mid);
    if (std::abs(g) < 1e-6) return mid;
    (g < 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-9 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace enrich::design
