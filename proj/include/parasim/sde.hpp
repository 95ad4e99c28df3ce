#pragma once

// Single-cell parasite dynamics: Euler-Maruyama steps of the jump-diffusion,
// the infinitesimal generator, and explosion handling.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "parasim/model.hpp"
#include "parasim/rng.hpp"
#include "parasim/stats.hpp"

namespace parasim {

/// Parasite load of one cell. Explosion is absorbing: x is +inf afterwards.
struct CellLoad {
  double x = 0.0;
  bool exploded = false;
  std::optional<double> explosion_time;
};

/// Counters for the clamp-and-flag discipline.
struct FlowDiagnostics {
  std::uint64_t steps = 0;
  std::uint64_t clamps = 0;  ///< steps whose Gaussian increment was clamped at 0
};

/// Model-derived constants for stepping the single-cell SDE.
class FlowKernel {
 public:
  FlowKernel(const ModelSpec& model, double x_explode);

  /// g(x) - p(x) * int z pi(dz): the drift left after compensating the jumps.
  double compensated_drift(double x) const;
  double sigma2(double x) const { return eval(model_->sigma2, x); }
  /// Total jump intensity p(x) * mass(pi).
  double jump_rate(double x) const;

  /// Step size after adaptive sub-stepping: |drift| h < 0.05 max(x, 1) and
  /// 2 sigma^2 h < (0.3 max(x, 1))^2.
  double adaptive_step(double x, double dt) const;

  /// One Euler-Maruyama step of size h, jumps included.
  double step(double x, double h, DriverStream& s, FlowDiagnostics* diag = nullptr) const;
  /// Continuous part only (drift and Gaussian increment, given the normal draw).
  double step_continuous(double x, double h, double xi, FlowDiagnostics* diag = nullptr) const;

  /// True when g, sigma^2 and p all vanish identically.
  bool null_dynamics() const { return null_; }
  bool has_diffusion() const { return diffusive_; }
  bool has_jumps() const { return jumping_; }
  double x_explode() const { return x_explode_; }
  const ModelSpec& model() const { return *model_; }

 private:
  const ModelSpec* model_;
  double x_explode_;
  double jump_first_moment_;
  bool null_;
  bool diffusive_;
  bool jumping_;
};

/// One Euler-Maruyama step (no sub-stepping). Exploded input is returned as is.
CellLoad step_flow(const CellLoad& x, double dt, const ModelSpec& model, DriverStream& s,
                   double x_explode = 1e12);

struct FlowPoint {
  double t;
  double x;
  bool exploded;
};

struct FlowPath {
  std::vector<FlowPoint> points;
  bool exploded = false;
  std::optional<double> explosion_time;
  FlowDiagnostics diagnostics;
};

/// Repeated steps from t0 to t1 with adaptive sub-stepping. Records every
/// step and ends early at explosion.
FlowPath simulate_flow(double x0, double t0, double t1, const ModelSpec& model,
                       const NumericsSpec& numerics, DriverStream& s);

/// CSV with columns time,load,exploded.
void write_path_csv(std::ostream& out, const FlowPath& path);

// ---------------------------------------------------------------------------
// Generator

/// A twice-differentiable test function with its first two derivatives.
struct TestFunction {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  /// Polynomial degree when f is a polynomial of degree <= 2 (enables the
  /// closed-form jump integral); -1 otherwise.
  int degree = -1;

  static TestFunction constant(double c = 1.0);
  static TestFunction identity();
  static TestFunction square();
  /// x^q (for x > 0).
  static TestFunction power(double q);
};

/// g f' + sigma^2 f'' + p int (f(x+z) - f(x) - z f'(x)) pi(dz). The jump
/// integral uses adaptive quadrature (closed form for point masses and for
/// quadratic test functions). Throws QuadratureError on non-convergence.
double apply_generator(const TestFunction& fn, double x, const ModelSpec& model, double quad_tol);

struct WeakErrorResult {
  Estimate increment;  ///< (f(X_h) - f(x)) / h over the ensemble
  double generator = 0.0;
  double z = 0.0;
};

/// Compares the one-step Euler increment of f against the generator.
WeakErrorResult weak_error_check(const TestFunction& fn, double x, const ModelSpec& model,
                                 double h, std::size_t M, std::uint64_t seed,
                                 double quad_tol = 1e-10, unsigned workers = 1);

}  // namespace parasim
