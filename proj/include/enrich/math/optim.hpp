#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace enrich::math {

class derivative_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ObjectiveFn = std::function<double(const std::vector<double>&)>;
using VectorFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct MinimizeOptions {
  int max_iterations = 400;
  double grad_tol = 1e-6;    // infinity norm of the numeric gradient
  double step_tol = 1e-11;   // stop when steps stagnate below this
  double fd_step = 1e-6;     // relative finite-difference step for gradients
  double max_step = 10.0;    // trust cap on the infinity norm of one step
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

// Central-difference gradient with per-coordinate step scaling.
std::vector<double> numeric_gradient(const ObjectiveFn& f,
                                     const std::vector<double>& x,
                                     double rel_step = 1e-6);

// q x p Jacobian of a vector-valued map, central differences.
std::vector<std::vector<double>> numeric_jacobian(const VectorFn& f,
                                                  const std::vector<double>& x,
                                                  double rel_step = 1e-6);

// p x p Hessian, central differences, returned symmetrized as (H + H^T)/2.
std::vector<std::vector<double>> numeric_hessian(const ObjectiveFn& f,
                                                 const std::vector<double>& x,
                                                 double rel_step = 1e-4);

// Quasi-Newton (BFGS) minimization with numeric gradients and an Armijo
// backtracking line search. When the line search stalls the routine falls
// back to a coordinate-wise pattern search before giving up, which handles
// the occasional ill-conditioned ridge without derivatives.
MinimizeResult minimize(const ObjectiveFn& f, std::vector<double> x0,
                        const MinimizeOptions& options = {});

}  // namespace enrich::math
