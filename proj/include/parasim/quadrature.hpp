#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace parasim {

/// Raised when adaptive quadrature cannot reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  /// Relative error estimate actually reached.
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Adaptive Gauss-Kronrod (15/31 point) integral of f over [lo, hi]. `hi` may
/// be +inf. Throws QuadratureError if the relative error estimate stays above
/// `rel_tol` (floored at 1e-14).
double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol);

}  // namespace parasim
