#pragma once

#include <cmath>
#include <functional>

#include "igs/common.hpp"

namespace igs::conic {

struct BisectResult {
  double lo = 0.0;  // last point known true (or the initial lo)
  double hi = 0.0;
  int evaluations = 0;
};

/// Bisection on a monotone non-increasing predicate; lo is assumed true and hi is never evaluated.
/// With check_lo the predicate is also called at lo and a false value raises BracketError.
template <class Pred>
BisectResult bisect(Pred&& pred, double lo, double hi, double tol, bool check_lo = false) {
  if (!(tol > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw BracketError("bisect: need finite lo <= hi and tol > 0");
  BisectResult r{lo, hi, 0};
  if (check_lo) {
    ++r.evaluations;
    if (!pred(lo)) throw BracketError("bisect: predicate is false at the lower end");
  }
  while (r.hi - r.lo > tol) {
    const double mid = 0.5 * (r.lo + r.hi);
    ++r.evaluations;
    if (pred(mid)) r.lo = mid;
    else r.hi = mid;
  }
  return r;
}

}  // namespace igs::conic
