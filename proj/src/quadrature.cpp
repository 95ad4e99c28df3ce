#include "parasim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace parasim {

double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  if (lo == hi) return 0.0;
  const double tol = std::max(rel_tol, 1e-14);
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, lo, hi, 20, tol, &error, &l1);
  if (!std::isfinite(value)) {
    throw QuadratureError("quadrature produced a non-finite value",
                          std::numeric_limits<double>::infinity());
  }
  const double scale = std::max(l1, std::abs(value));
  const double achieved = scale > 0.0 ? error / scale : error;
  // Allow a small factor over the request: the Kronrod estimate is an upper bound.
  if (achieved > 10.0 * tol && error > 1e-300) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "quadrature did not converge: relative error %.3e above tolerance %.3e", achieved,
                  tol);
    throw QuadratureError(buf, achieved);
  }
  return value;
}

}  // namespace parasim
