#include "parasim/presets.hpp"

#include <utility>

namespace parasim::presets {

namespace {

using FF = FunctionFamily;
using FR = FunctionRole;
using JF = JumpFamily;
using JR = JumpRole;

FunctionSpec fn(FF f, std::vector<double> p, FR role) { return make_function(f, std::move(p), role); }

ModelSpec base() {
  ModelSpec m;
  m.kappa = make_fragmentation(FragmentationFamily::uniform01, {});
  return m;
}

}  // namespace

ModelSpec pure_fragmentation() { return base(); }

ModelSpec full_with_death() {
  ModelSpec m = base();
  m.g = fn(FF::linear, {0.3}, FR::growth_g);
  m.sigma2 = fn(FF::power, {0.1, 2.0}, FR::diffusion_sigma2);
  m.p = fn(FF::linear, {0.5}, FR::jump_rate_p);
  m.pi = make_jump_law(JF::exponential, {0.2}, JR::parasite_jump_pi, 1.0);
  m.lambda = fn(FF::constant, {0.3}, FR::reservoir_rate_lambda);
  m.doseI = make_jump_law(JF::exponential, {0.5}, JR::reservoir_dose_I);
  m.r = fn(FF::saturating_hill, {0.3, 1.0, 1.0}, FR::lysis_rate_r);
  m.doseP = make_jump_law(JF::point_mass, {0.5}, JR::lysis_dose_P);
  m.kappa = make_fragmentation(FragmentationFamily::beta_symmetric, {2.0});
  m.b = 1.0;
  m.d = 0.5;
  return m;
}

ModelSpec subcritical() {
  ModelSpec m = base();
  m.g = fn(FF::linear, {0.4}, FR::growth_g);
  m.lambda = fn(FF::linear, {0.2}, FR::reservoir_rate_lambda);
  m.doseI = make_jump_law(JF::exponential, {0.5}, JR::reservoir_dose_I);
  m.sigma2 = fn(FF::linear, {0.5}, FR::diffusion_sigma2);
  m.p = fn(FF::linear, {0.5}, FR::jump_rate_p);
  m.pi = make_jump_law(JF::exponential, {0.3}, JR::parasite_jump_pi, 1.0);
  m.r = fn(FF::saturating_hill, {0.2, 1.0, 1.0}, FR::lysis_rate_r);
  m.doseP = make_jump_law(JF::point_mass, {1.0}, JR::lysis_dose_P);
  m.b = 1.0;
  m.x0 = 20.0;
  return m;
}

ModelSpec supercritical() {
  ModelSpec m = base();
  m.g = fn(FF::linear, {1.5}, FR::growth_g);
  m.kappa = make_fragmentation(FragmentationFamily::point_mass_half, {});
  m.b = 1.0;
  m.d = 0.5;
  return m;
}

ModelSpec explosive() {
  ModelSpec m = base();
  m.g = fn(FF::iterated_log, {1.0, 2.0}, FR::growth_g);
  m.lambda = fn(FF::constant, {0.5}, FR::reservoir_rate_lambda);
  m.doseI = make_jump_law(JF::exponential, {1.0}, JR::reservoir_dose_I);
  m.kappa = make_fragmentation(FragmentationFamily::point_mass_half, {});
  m.x0 = 10.0;
  m.d = 0.5;
  return m;
}

ModelSpec iterated_log_growth() {
  ModelSpec m = base();
  m.g = fn(FF::iterated_log, {1.0, 2.0}, FR::growth_g);
  m.x0 = 1e6;
  return m;
}

ModelSpec strong_growth() {
  ModelSpec m = base();
  m.g = fn(FF::log_boosted, {1.0, 1.2}, FR::growth_g);
  m.x0 = 1e6;
  return m;
}

ModelSpec no_reservoir_extinction() {
  ModelSpec m = base();
  m.g = fn(FF::logistic, {0.5, 10.0}, FR::growth_g);
  m.r = fn(FF::saturating_hill, {0.2, 1.0, 1.0}, FR::lysis_rate_r);
  m.doseP = make_jump_law(JF::point_mass, {1.0}, JR::lysis_dose_P);
  m.kappa = make_fragmentation(FragmentationFamily::point_mass_half, {});
  m.d = 0.5;
  return m;
}

ModelSpec no_reservoir_explosive() {
  ModelSpec m = base();
  m.g = fn(FF::iterated_log, {1.0, 2.0}, FR::growth_g);
  m.r = fn(FF::saturating_hill, {0.5, 1.0, 1.0}, FR::lysis_rate_r);
  m.doseP = make_jump_law(JF::point_mass, {1.0}, JR::lysis_dose_P);
  m.kappa = make_fragmentation(FragmentationFamily::point_mass_half, {});
  m.x0 = 10.0;
  m.d = 0.5;
  return m;
}

ModelSpec coming_down() {
  ModelSpec m = base();
  m.g = fn(FF::log_boosted, {-1.0, 2.0}, FR::growth_g);
  m.lambda = fn(FF::constant, {1.0}, FR::reservoir_rate_lambda);
  m.doseI = make_jump_law(JF::exponential, {1.0}, JR::reservoir_dose_I);
  m.x0 = 1e6;
  return m;
}

ModelSpec linear_mean_field() {
  ModelSpec m = base();
  m.g = fn(FF::linear, {0.5}, FR::growth_g);
  m.lambda = fn(FF::constant, {0.2}, FR::reservoir_rate_lambda);
  m.doseI = make_jump_law(JF::exponential, {1.0}, JR::reservoir_dose_I);
  m.r = fn(FF::piecewise_linear, {0.0, 0.0, 0.01, 0.1}, FR::lysis_rate_r);
  m.doseP = make_jump_law(JF::point_mass, {1.0}, JR::lysis_dose_P);
  m.b = 1.0;
  m.x0 = 1.0;
  return m;
}

ModelSpec fragmentation_diffusion() {
  ModelSpec m = base();
  m.sigma2 = fn(FF::power, {0.5, 2.0}, FR::diffusion_sigma2);
  return m;
}

ModelSpec rho_negative() {
  ModelSpec m = base();
  m.g = fn(FF::linear, {-1.0}, FR::growth_g);
  return m;
}

namespace {
struct Entry {
  const char* name;
  ModelSpec (*make)();
};
constexpr Entry kEntries[] = {
    {"pure-fragmentation", pure_fragmentation},
    {"full-with-death", full_with_death},
    {"subcritical", subcritical},
    {"supercritical", supercritical},
    {"explosive", explosive},
    {"iterated-log-growth", iterated_log_growth},
    {"strong-growth", strong_growth},
    {"no-reservoir-extinction", no_reservoir_extinction},
    {"no-reservoir-explosive", no_reservoir_explosive},
    {"coming-down", coming_down},
    {"linear-mean-field", linear_mean_field},
    {"fragmentation-diffusion", fragmentation_diffusion},
    {"rho-negative", rho_negative},
};
}  // namespace

std::optional<ModelSpec> by_name(std::string_view name) {
  for (const auto& e : kEntries) {
    if (name == e.name) return e.make();
  }
  return std::nullopt;
}

std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& e : kEntries) out.emplace_back(e.name);
  return out;
}

}  // namespace parasim::presets
