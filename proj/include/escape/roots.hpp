#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace escape {

// Bisection on [lo, hi] with g(lo), g(hi) of opposite sign; runs to the
// floating-point resolution of the bracket.
template <class G>
double bisect(G&& g, double lo, double hi, const char* who) {
  double glo = g(lo), ghi = g(hi);
  if (glo == 0) return lo;
  if (ghi == 0) return hi;
  if ((glo < 0) == (ghi < 0)) throw std::runtime_error(std::string(who) + ": bracket has no sign change");
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0) return mid;
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Nonzero root of an equation that also has the trivial root H = 0: start
// the bracket at 1e-6 and grow the upper end geometrically until g changes sign.
template <class G>
double positive_root(G&& g, const char* who, double start = 1e-6, double hmax_limit = 1e12) {
  const double g0 = g(start);
  if (g0 == 0 || !std::isfinite(g0)) throw std::runtime_error(std::string(who) + ": degenerate bracket start");
  double lo = start, hi = 1.0;
  while ((g(hi) < 0) == (g0 < 0)) {
    lo = hi;
    hi *= 2.0;
    if (hi > hmax_limit) throw std::runtime_error(std::string(who) + ": no positive root found");
  }
  return bisect(g, lo, hi, who);
}

}  // namespace escape
