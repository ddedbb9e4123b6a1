#include "enrich/math/quadrature.hpp"

#include <cmath>

namespace enrich::math {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::domain_error("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.kind = QuadratureRule::Kind::legendre;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based starting guess, then Newton on the recurrence.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1 || n > 100) throw std::domain_error("gauss_hermite: need 1 <= n <= 100");
  QuadratureRule rule;
  rule.kind = QuadratureRule::Kind::hermite;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int m = (n + 1) / 2;
  double x = 0.0, pp = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
    } else if (i == 2) {
      x = 1.86 * x - 0.86 * rule.nodes[n - 1];
    } else if (i == 3) {
      x = 1.91 * x - 0.91 * rule.nodes[n - 2];
    } else {
      x = 2.0 * x - rule.nodes[n - i + 1];
    }
    // Newton iteration on the orthonormal Hermite recurrence; stays bounded
    // for n up to 100.
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = x * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    double w = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

namespace {

// Kronrod 15-point nodes/weights on [-1,1] plus the embedded Gauss-7 weights.
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct Segment {
  double a, b, value, err;
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fc = f(c);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    double x = h * kXgk[j];
    double f1 = f(c - x);
    double f2 = f(c + x);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  Segment s;
  s.a = a;
  s.b = b;
  s.value = resk * h;
  s.err = std::abs((resk - resg) * h);
  return s;
}

double adaptive(const std::function<double(double)>& f, double a, double b,
                double tol) {
  std::vector<Segment> segs;
  segs.push_back(gk15(f, a, b));
  double total = segs[0].value;
  double toterr = segs[0].err;
  const int max_segments = 2000;
  while (toterr > tol && static_cast<int>(segs.size()) < max_segments) {
    // Split the segment with the largest error estimate.
    size_t worst = 0;
    for (size_t i = 1; i < segs.size(); ++i)
      if (segs[i].err > segs[worst].err) worst = i;
    Segment s = segs[worst];
    double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b)) break;  // interval exhausted
    Segment left = gk15(f, s.a, mid);
    Segment right = gk15(f, mid, s.b);
    segs[worst] = left;
    segs.push_back(right);
    total += left.value + right.value - s.value;
    toterr += left.err + right.err - s.err;
  }
  if (!(toterr <= std::max(tol, 1e-14 * std::abs(total)) || toterr <= tol * 32)) {
    if (toterr > std::max(1e3 * tol, 1e-10 * std::abs(total)))
      throw accuracy_error("integrate: refinement did not reach tolerance", total, toterr);
  }
  return total;
}

}  // namespace

double fixed_legendre(const std::function<double(double)>& f, double a,
                      double b, const QuadratureRule& rule) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double sum = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(c + h * rule.nodes[i]);
  return sum * h;
}

double integrate(const std::function<double(double)>& f, double lower,
                 double upper, double tol) {
  const bool lo_inf = std::isinf(lower);
  const bool hi_inf = std::isinf(upper);
  if (!lo_inf && !hi_inf) {
    if (lower == upper) return 0.0;
    if (lower > upper) return -integrate(f, upper, lower, tol);
    return adaptive(f, lower, upper, tol);
  }
  if (!lo_inf && hi_inf) {
    // x = a + t/(1-t), dx = dt/(1-t)^2, t in (0,1)
    const double a = lower;
    auto g = [&](double t) {
      double om = 1.0 - t;
      double x = a + t / om;
      return f(x) / (om * om);
    };
    return adaptive(g, 0.0, 1.0, tol);
  }
  if (lo_inf && !hi_inf) {
    const double b = upper;
    auto g = [&](double t) {
      double om = 1.0 - t;
      double x = b - t / om;
      return f(x) / (om * om);
    };
    return adaptive(g, 0.0, 1.0, tol);
  }
  // Split the doubly infinite range at zero.
  return integrate(f, -kInf, 0.0, tol / 2) + integrate(f, 0.0, kInf, tol / 2);
}

}  // namespace enrich::math
