#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace enrich::math {

class bracketing_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Brent's method. Requires f(lo) * f(hi) <= 0; the returned point never
// leaves [lo, hi] and satisfies bracket width < tol on exit.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-12, int max_iter = 200);

}  // namespace enrich::math
