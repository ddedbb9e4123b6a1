#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace enrich::math {

// Thrown when adaptive refinement stalls; carries the best estimate so the
// caller can decide whether the accuracy is still usable.
class accuracy_error : public std::runtime_error {
 public:
  accuracy_error(const std::string& what, double best, double err)
      : std::runtime_error(what), best_estimate(best), error_estimate(err) {}
  double best_estimate;
  double error_estimate;
};

struct QuadratureRule {
  enum class Kind { legendre, hermite };
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // all positive
  Kind kind;
};

// n-point Gauss-Legendre rule on [-1,1]; exact for polynomials of degree
// 2n-1. Weights sum to 2.
QuadratureRule gauss_legendre(int n);

// n-point Gauss-Hermite rule for weight exp(-x^2), 1 <= n <= 100; exact for
// integrands x^k with k <= 2n-1. Weights sum to sqrt(pi).
QuadratureRule gauss_hermite(int n);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Adaptive Gauss-Kronrod (G7,K15) integration of f over (lower, upper).
// Semi-infinite and doubly infinite ranges are mapped onto (0,1) with
// x = a + t/(1-t) and its mirror. Aims for absolute error below tol.
double integrate(const std::function<double(double)>& f, double lower,
                 double upper, double tol = 1e-9);

// Fixed-order Gauss-Legendre on [a,b]; no error control. Used where the
// integrand is known smooth and the caller wants node reuse.
double fixed_legendre(const std::function<double(double)>& f, double a,
                      double b, const QuadratureRule& rule);

}  // namespace enrich::math
