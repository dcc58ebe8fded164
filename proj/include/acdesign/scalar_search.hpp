#pragma once

#include <cmath>
#include <utility>

#include "acdesign/errors.hpp"

namespace acdesign {

struct ScalarOptimum {
  double x;
  double value;
};

/// Golden-section search for the maximum of a unimodal f on [a, b].
/// The endpoints are compared against the interior optimum, so maxima on the
/// boundary are returned exactly.
template <class F>
ScalarOptimum golden_section_maximize(F&& f, double a, double b, double tol, int max_iter = 200) {
  constexpr double inv_phi = 0.6180339887498949;
  if (b < a) std::swap(a, b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  const double fa = f(a);
  const double fb = f(b);
  const double a0 = a;
  const double b0 = b;
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  ScalarOptimum best = fc >= fd ? ScalarOptimum{c, fc} : ScalarOptimum{d, fd};
  if (fa > best.value) best = {a0, fa};
  if (fb > best.value) best = {b0, fb};
  return best;
}

/// Bisection for a sign change of f on [a, b].
template <class F>
double bisect_root(F&& f, double a, double b, double tol, int max_iter = 400) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw InfeasibleGeometry("bisection interval does not bracket a root");
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace acdesign
