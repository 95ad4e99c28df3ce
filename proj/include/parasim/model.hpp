#pragma once

// Parametric model space: rate functions, jump and dose laws, the
// fragmentation law, and the structural well-posedness checks.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace parasim {

class DriverStream;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Raised for malformed specifications (wrong parameter counts, unknown
/// family names, invalid numeric settings).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Rate functions

enum class FunctionFamily {
  constant,          ///< [c]                      c
  linear,            ///< [k]                      k x
  affine,            ///< [c0, k]                  c0 + k x
  logistic,          ///< [rate, capacity]         rate x (1 - x / capacity)
  power,             ///< [c, e]                   c x^e, e > 0
  saturating_hill,   ///< [vmax, half=1, n=1]      vmax x^n / (half^n + x^n)
  piecewise_linear,  ///< [x0, y0, x1, y1, ...]    interpolated, flat past the last knot
  log_boosted,       ///< [c, e]                   c x (1 + ln(1 + x))^e
  iterated_log,      ///< [c, e, shift=e]          c x L (ln L)^e, L = ln(x + shift)
};

enum class FunctionRole { growth_g, diffusion_sigma2, jump_rate_p, reservoir_rate_lambda, lysis_rate_r };

struct FunctionSpec {
  FunctionFamily family = FunctionFamily::constant;
  std::vector<double> params{0.0};
  FunctionRole role = FunctionRole::growth_g;
  bool operator==(const FunctionSpec&) const = default;
};

/// Builds a FunctionSpec, filling optional parameters and checking the
/// parameter count. Throws SpecError on a count mismatch.
FunctionSpec make_function(FunctionFamily family, std::vector<double> params, FunctionRole role);

/// Evaluates f at x in [0, inf]. At x = +inf the family's limit is returned.
double eval(const FunctionSpec& f, double x);

/// Shape facts about a function on [0, inf), derived per family.
struct FunctionTraits {
  double value_at_zero = 0.0;
  bool nonnegative = true;
  bool nondecreasing = true;
  bool bounded = true;
  bool concave = true;
  bool identically_zero = false;
  /// lim f(x)/x as x -> inf (may be +-inf).
  double asymptotic_slope = 0.0;
};
FunctionTraits traits(const FunctionSpec& f);

/// Upper bound of f over [lo, hi] (hi may be +inf).
double upper_bound(const FunctionSpec& f, double lo, double hi);

std::string_view to_string(FunctionFamily f);
std::string_view to_string(FunctionRole r);
std::optional<FunctionFamily> function_family_from(std::string_view name);

// ---------------------------------------------------------------------------
// Jump-size and dose laws

enum class JumpFamily {
  point_mass,        ///< [z0]
  exponential,       ///< [mean]
  uniform_interval,  ///< [lo, hi]
  truncated_pareto,  ///< [index, lo, hi]   density ~ z^(-index-1) on [lo, hi]
};

enum class JumpRole { parasite_jump_pi, reservoir_dose_I, lysis_dose_P };

/// A finite measure on (0, inf): `mass` times a probability law. Dose laws
/// carry mass 1; the parasite jump measure may carry any finite mass.
struct JumpSizeLaw {
  JumpFamily family = JumpFamily::point_mass;
  std::vector<double> params{1.0};
  double mass = 1.0;
  JumpRole role = JumpRole::parasite_jump_pi;
  bool operator==(const JumpSizeLaw&) const = default;
};

JumpSizeLaw make_jump_law(JumpFamily family, std::vector<double> params, JumpRole role,
                          double mass = 1.0);

/// Mean of the normalized law (the dose mean for dose laws).
double dose_mean(const JumpSizeLaw& law);
/// Second moment of the normalized law.
double second_moment(const JumpSizeLaw& law);
/// Support [lo, hi] of the normalized law; hi may be +inf.
std::pair<double, double> support(const JumpSizeLaw& law);
/// Density of the normalized law (not meaningful for point masses).
double density(const JumpSizeLaw& law, double z);
/// Draws one size from the normalized law.
double sample(const JumpSizeLaw& law, DriverStream& s);

std::string_view to_string(JumpFamily f);
std::string_view to_string(JumpRole r);
std::optional<JumpFamily> jump_family_from(std::string_view name);

// ---------------------------------------------------------------------------
// Fragmentation law of the inherited fraction

enum class FragmentationFamily {
  beta_symmetric,   ///< [beta]  Beta(beta, beta)
  uniform01,        ///< []
  point_mass_half,  ///< []
};

struct FragmentationLaw {
  FragmentationFamily family = FragmentationFamily::uniform01;
  std::vector<double> params{};
  bool operator==(const FragmentationLaw&) const = default;
};

FragmentationLaw make_fragmentation(FragmentationFamily family, std::vector<double> params);

/// E[Theta^q]; +inf when the moment diverges.
double theta_moment(const FragmentationLaw& kappa, double q);
/// E[ln(1/Theta)].
double mean_log_inverse(const FragmentationLaw& kappa);
double sample_theta(const FragmentationLaw& kappa, DriverStream& s);

std::string_view to_string(FragmentationFamily f);
std::optional<FragmentationFamily> fragmentation_family_from(std::string_view name);

// ---------------------------------------------------------------------------
// Full model and numerical settings

struct ModelSpec {
  FunctionSpec g{FunctionFamily::constant, {0.0}, FunctionRole::growth_g};
  FunctionSpec sigma2{FunctionFamily::constant, {0.0}, FunctionRole::diffusion_sigma2};
  FunctionSpec p{FunctionFamily::constant, {0.0}, FunctionRole::jump_rate_p};
  FunctionSpec lambda{FunctionFamily::constant, {0.0}, FunctionRole::reservoir_rate_lambda};
  FunctionSpec r{FunctionFamily::constant, {0.0}, FunctionRole::lysis_rate_r};
  JumpSizeLaw pi{JumpFamily::point_mass, {1.0}, 0.0, JumpRole::parasite_jump_pi};
  JumpSizeLaw doseI{JumpFamily::point_mass, {1.0}, 1.0, JumpRole::reservoir_dose_I};
  JumpSizeLaw doseP{JumpFamily::point_mass, {1.0}, 1.0, JumpRole::lysis_dose_P};
  FragmentationLaw kappa{FragmentationFamily::point_mass_half, {}};
  double b = 1.0;  ///< division rate
  double d = 0.0;  ///< death rate
  double x0 = 1.0; ///< initial load
};

struct NumericsSpec {
  double dt = 1e-3;
  double T = 1.0;
  double x_explode = 1e12;
  std::size_t max_cells = 100000;
  std::size_t replicates = 1000;
  std::uint64_t master_seed = 20240501;
  double tol_fp = 1e-3;
  int k_max_fp = 10;
  double quad_tol = 1e-10;
  unsigned workers = 1;
};

/// Throws SpecError unless dt, T, x_explode, caps and tolerances are usable.
void check_numerics(const NumericsSpec& n);

/// Total first moment of the parasite jump measure: mass * mean.
inline double jump_first_moment(const ModelSpec& m) { return m.pi.mass * dose_mean(m.pi); }

/// True when drift, jump rate and reservoir rate grow at most linearly and
/// the diffusion coefficient at most quadratically: a sufficient condition
/// for the spinal process not to explode.
bool has_linear_growth(const ModelSpec& m);

// ---------------------------------------------------------------------------
// Structural validation

enum class Clause {
  growth_and_jump_rate,  ///< g continuous, g(0)=0; p locally Lipschitz, non-decreasing, p(0)=0
  diffusion,             ///< sigma 1/2-Hoelder, sigma(0)=0
  jump_measure,          ///< int (z ^ z^2) pi(dz) < inf
  reinfection,           ///< r, lambda continuous; r non-decreasing, bounded, r(0)=0; finite dose means
  fragmentation,         ///< symmetric on (0,1), E[ln 1/Theta] < inf
  structure,             ///< rates b, d, initial load, parameter ranges
};

std::string_view to_string(Clause c);

struct ClauseResult {
  Clause clause;
  bool passed = true;
  std::vector<std::string> violations;
};

struct ValidationReport {
  std::vector<ClauseResult> clauses;
  bool ok() const;
  const ClauseResult& at(Clause c) const;
  /// One line per violation, prefixed with the clause label.
  std::string summary() const;
};

/// Checks every well-posedness clause. Never throws on bad values; problems
/// are listed in the report.
ValidationReport validate_model(const ModelSpec& spec);

}  // namespace parasim
