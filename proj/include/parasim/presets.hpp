#pragma once

// Named model presets used by the experiments, tests and example configs.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parasim/model.hpp"

namespace parasim::presets {

/// Pure fragmentation: no growth, no noise, no infection, uniform kappa.
ModelSpec pure_fragmentation();
/// Every mechanism switched on, with cell death d = 0.5.
ModelSpec full_with_death();
/// g + E[I] lambda = 0.5 x with b = 1, plus diffusion, jumps and lysis.
ModelSpec subcritical();
/// g = 1.5 x, b = 1, d = 0.5.
ModelSpec supercritical();
/// g = x L (ln L)^2, L = ln(x + e), positive constant reservoir, x0 = 10.
ModelSpec explosive();
/// Iterated-log growth alone, x0 = 1e6.
ModelSpec iterated_log_growth();
/// g = x (1 + ln(1 + x))^1.2, x0 = 1e6.
ModelSpec strong_growth();
/// Logistic growth, lambda = 0, Hill lysis with E[P] r(inf) = 0.2.
ModelSpec no_reservoir_extinction();
/// Iterated-log growth, lambda = 0, lysis positive at x0.
ModelSpec no_reservoir_explosive();
/// r = 0, strongly negative growth, constant reservoir, x0 = 1e6.
ModelSpec coming_down();
/// g = 0.5 x, b = 1, lambda E[I] + r0 E[P] = 0.3, x0 = 1; mean field 0.6 + 0.4 e^{-t/2}.
ModelSpec linear_mean_field();
/// Fragmentation with sigma^2 = 0.5 x^2, uniform kappa.
ModelSpec fragmentation_diffusion();
/// g = -x, b = 1, no infection.
ModelSpec rho_negative();

/// Lookup by kebab-case name (e.g. "pure-fragmentation").
std::optional<ModelSpec> by_name(std::string_view name);
std::vector<std::string> names();

}  // namespace parasim::presets
