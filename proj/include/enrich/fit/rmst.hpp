#pragma once

#include "enrich/fit/result.hpp"
#include "enrich/sim/params.hpp"
#include "enrich/sim/population.hpp"

namespace enrich::fit {

// Log-likelihood of the joint longitudinal-survival model for one group
// snapshot: per subject the product of measurement densities, the hazard at
// an observed event and the survival factor, marginalized over the random
// effects with a tensor Gauss-Hermite rule.
double joint_log_likelihood(const sim::GroupParams& gp,
                            const sim::GroupSnapshot& snap, int gh_nodes = 15);

// Difference in restricted mean survival time up to t_star between the
// experimental and control arms, with the survival curves marginalized over
// the random effects. The time integral splits at the baseline-hazard step.
double rmst_difference(const sim::GroupParams& gp, double t_star,
                       int gh_nodes = 15);

// Maximum-likelihood fit of the ten-parameter joint model followed by the
// delta method for the RMST difference. Reports converged = false whenever
// the observed information is not positive definite.
AnalysisResult fit_rmst(const sim::GroupSnapshot& snap, design::Group group,
                        int analysis, double t_star = 5.0, int gh_nodes = 15);

// Transform between the natural parameter vector
// (mu0, mu1, phi1, phi12, phi2, sigma2, gamma, eta, b2, c) and the
// unconstrained coordinates used by the optimizer.
std::vector<double> rmst_encode(const sim::GroupParams& gp);
sim::GroupParams rmst_decode(const std::vector<double>& x);

}  // namespace enrich::fit
