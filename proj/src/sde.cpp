#include "parasim/sde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "parasim/csv.hpp"
#include "parasim/parallel.hpp"
#include "parasim/quadrature.hpp"

namespace parasim {

FlowKernel::FlowKernel(const ModelSpec& model, double x_explode)
    : model_(&model), x_explode_(x_explode), jump_first_moment_(jump_first_moment(model)) {
  diffusive_ = !traits(model.sigma2).identically_zero;
  jumping_ = !traits(model.p).identically_zero && model.pi.mass > 0.0;
  null_ = traits(model.g).identically_zero && !diffusive_ && !jumping_;
}

double FlowKernel::compensated_drift(double x) const {
  double drift = eval(model_->g, x);
  if (jumping_) drift -= eval(model_->p, x) * jump_first_moment_;
  return drift;
}

double FlowKernel::jump_rate(double x) const {
  return jumping_ ? eval(model_->p, x) * model_->pi.mass : 0.0;
}

double FlowKernel::adaptive_step(double x, double dt) const {
  if (null_) return dt;
  const double scale = std::max(x, 1.0);
  double h = dt;
  const double drift = std::abs(compensated_drift(x));
  if (drift * h >= 0.05 * scale) h = 0.05 * scale / drift * 0.999;
  if (diffusive_) {
    const double s2 = sigma2(x);
    const double cap = 0.09 * scale * scale;
    if (2.0 * s2 * h >= cap) h = cap / (2.0 * s2) * 0.999;
  }
  return h;
}

double FlowKernel::step_continuous(double x, double h, double xi, FlowDiagnostics* diag) const {
  double next = x + compensated_drift(x) * h;
  if (diffusive_) next += std::sqrt(std::max(0.0, 2.0 * sigma2(x)) * h) * xi;
  if (diag) ++diag->steps;
  if (next < 0.0) {
    if (diag) ++diag->clamps;
    next = 0.0;
  }
  if (next >= x_explode_ || std::isnan(next)) return kInfinity;
  return next;
}

double FlowKernel::step(double x, double h, DriverStream& s, FlowDiagnostics* diag) const {
  if (std::isinf(x)) return x;
  if (null_) {
    if (diag) ++diag->steps;
    return x;
  }
  const double xi = diffusive_ ? s.normal() : 0.0;
  double jumps = 0.0;
  if (jumping_) {
    const std::uint64_t count = s.poisson(jump_rate(x) * h);
    for (std::uint64_t k = 0; k < count; ++k) jumps += sample(model_->pi, s);
  }
  double next = step_continuous(x, h, xi, diag);
  if (std::isinf(next)) return next;
  next += jumps;
  if (next >= x_explode_) return kInfinity;
  return next;
}

CellLoad step_flow(const CellLoad& x, double dt, const ModelSpec& model, DriverStream& s,
                   double x_explode) {
  if (x.exploded) return x;
  const FlowKernel kernel(model, x_explode);
  CellLoad out = x;
  out.x = kernel.step(x.x, dt, s);
  out.exploded = std::isinf(out.x);
  return out;
}

FlowPath simulate_flow(double x0, double t0, double t1, const ModelSpec& model,
                       const NumericsSpec& numerics, DriverStream& s) {
  const FlowKernel kernel(model, numerics.x_explode);
  FlowPath path;
  double t = t0;
  double x = x0 >= numerics.x_explode ? kInfinity : x0;
  path.points.push_back({t, x, std::isinf(x)});
  if (std::isinf(x)) {
    path.exploded = true;
    path.explosion_time = t;
    return path;
  }
  while (t < t1) {
    double h = std::min(kernel.adaptive_step(x, numerics.dt), t1 - t);
    // Snap the final step when only round-off would remain.
    if (t1 - (t + h) < 1e-12 * std::max(1.0, std::abs(t1))) h = t1 - t;
    x = kernel.step(x, h, s, &path.diagnostics);
    t = (h == t1 - t) ? t1 : t + h;
    path.points.push_back({t, x, std::isinf(x)});
    if (std::isinf(x)) {
      path.exploded = true;
      path.explosion_time = t;
      break;
    }
  }
  return path;
}

void write_path_csv(std::ostream& out, const FlowPath& path) {
  CsvWriter csv(out);
  csv.row("time", "load", "exploded");
  for (const auto& p : path.points) csv.row(p.t, p.x, p.exploded ? 1 : 0);
}

// ---------------------------------------------------------------------------

TestFunction TestFunction::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }, 0};
}

TestFunction TestFunction::identity() {
  return {[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }, 1};
}

TestFunction TestFunction::square() {
  return {[](double x) { return x * x; }, [](double x) { return 2.0 * x; },
          [](double) { return 2.0; }, 2};
}

TestFunction TestFunction::power(double q) {
  return {[q](double x) { return std::pow(x, q); },
          [q](double x) { return q * std::pow(x, q - 1.0); },
          [q](double x) { return q * (q - 1.0) * std::pow(x, q - 2.0); }, -1};
}

double apply_generator(const TestFunction& fn, double x, const ModelSpec& model, double quad_tol) {
  const double fp = fn.df(x);
  double value = eval(model.g, x) * fp + eval(model.sigma2, x) * fn.d2f(x);
  const double rate = eval(model.p, x) * model.pi.mass;
  if (rate == 0.0) return value;
  double jump = 0.0;
  if (fn.degree >= 0 && fn.degree <= 2) {
    // f(x+z) - f(x) - z f'(x) = z^2 f''/2 exactly for quadratics.
    jump = 0.5 * fn.d2f(x) * second_moment(model.pi);
  } else if (model.pi.family == JumpFamily::point_mass) {
    const double z = model.pi.params[0];
    jump = fn.f(x + z) - fn.f(x) - z * fp;
  } else {
    const double fx = fn.f(x);
    const auto [lo, hi] = support(model.pi);
    jump = integrate(
        [&](double z) { return (fn.f(x + z) - fx - z * fp) * density(model.pi, z); }, lo, hi,
        quad_tol);
  }
  return value + rate * jump;
}

WeakErrorResult weak_error_check(const TestFunction& fn, double x, const ModelSpec& model,
                                 double h, std::size_t M, std::uint64_t seed, double quad_tol,
                                 unsigned workers) {
  const FlowKernel kernel(model, kInfinity);
  const double fx = fn.f(x);
  std::vector<double> increments(M);
  for_each_replicate(M, workers, [&](std::size_t i) {
    DriverStream s(seed, "weak-error", i);
    increments[i] = (fn.f(kernel.step(x, h, s)) - fx) / h;
  });
  WeakErrorResult out;
  out.increment = estimate_mean(increments);
  out.generator = apply_generator(fn, x, model, quad_tol);
  out.z = z_score(out.increment, out.generator, 1e-9);
  return out;
}

}  // namespace parasim
