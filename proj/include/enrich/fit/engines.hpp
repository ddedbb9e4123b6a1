#pragma once

#include <array>
#include <vector>

#include "enrich/fit/result.hpp"
#include "enrich/sim/population.hpp"

namespace enrich::fit {

// Partial-likelihood fit of the treatment indicator (Breslow ties); the
// observed information of the partial likelihood gives the inverse variance.
AnalysisResult fit_cox(const sim::GroupSnapshot& snap, design::Group group, int analysis);

// Cox fit with the biomarker carried forward as a time-varying covariate; a
// subject enters a risk set only once it has a measurement to carry.
AnalysisResult fit_cox_tvc(const sim::GroupSnapshot& snap, design::Group group,
                           int analysis);

// Test hook: the same machinery with the covariate coefficient pinned at
// zero, which must reproduce fit_cox exactly.
AnalysisResult fit_cox_tvc_fixed_gamma(const sim::GroupSnapshot& snap,
                                       design::Group group, int analysis);

// Conditional-score fit of (gamma, eta) with the pooled measurement-error
// variance plugged in; sandwich variance from the numeric derivative of the
// score and the empirical variance of per-subject contributions.
AnalysisResult fit_conditional_score(const sim::GroupSnapshot& snap,
                                     design::Group group, int analysis);

// Score value at given parameters; exposed for the unbiasedness checks and
// the finite-difference cross-validation of the derivative matrix.
std::vector<double> conditional_score_value(const sim::GroupSnapshot& snap,
                                            double gamma, double eta, double sigma2);

// Per-subject score contributions at the given parameters; they sum to the
// total score.
std::vector<std::array<double, 2>> conditional_score_contributions(
    const sim::GroupSnapshot& snap, double gamma, double eta, double sigma2);

// Pooled residual variance over subjects with more than two measurements.
double pooled_sigma2(const sim::GroupSnapshot& snap);

}  // namespace enrich::fit
