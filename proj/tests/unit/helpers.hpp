#pragma once

#include <cmath>
#include <vector>

#include "parasim/model.hpp"

namespace parasim::testing {

inline FunctionSpec fn(FunctionFamily f, std::vector<double> p, FunctionRole role) {
  return make_function(f, std::move(p), role);
}

inline FunctionSpec g_linear(double k) { return fn(FunctionFamily::linear, {k}, FunctionRole::growth_g); }
inline FunctionSpec lambda_const(double c) {
  return fn(FunctionFamily::constant, {c}, FunctionRole::reservoir_rate_lambda);
}
inline FunctionSpec r_const_ramp(double r0) {
  // r(0)=0 forces a ramp; past 1e-9 it is flat at r0
  return fn(FunctionFamily::piecewise_linear, {0.0, 0.0, 1e-9, r0}, FunctionRole::lysis_rate_r);
}

/// Only divisions at rate b, halving.
inline ModelSpec halving_model(double b = 1.0, double d = 0.0) {
  ModelSpec m;
  m.kappa = make_fragmentation(FragmentationFamily::point_mass_half, {});
  m.b = b;
  m.d = d;
  return m;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace parasim::testing
