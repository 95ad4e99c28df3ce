#include "parasim/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>

#include "parasim/rng.hpp"

namespace parasim {

namespace {

struct FamilyArity {
  std::size_t required;
  std::size_t optional;
};

FamilyArity arity(FunctionFamily f) {
  switch (f) {
    case FunctionFamily::constant: return {1, 0};
    case FunctionFamily::linear: return {1, 0};
    case FunctionFamily::affine: return {2, 0};
    case FunctionFamily::logistic: return {2, 0};
    case FunctionFamily::power: return {2, 0};
    case FunctionFamily::saturating_hill: return {1, 2};
    case FunctionFamily::piecewise_linear: return {2, 0};
    case FunctionFamily::log_boosted: return {2, 0};
    case FunctionFamily::iterated_log: return {2, 1};
  }
  return {0, 0};
}

double sign_infinity(double c) { return c > 0 ? kInfinity : (c < 0 ? -kInfinity : 0.0); }

double hill(const std::vector<double>& p, double x) {
  const double vmax = p[0], half = p[1], n = p[2];
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return vmax;
  return vmax / (1.0 + std::pow(half / x, n));
}

double piecewise(const std::vector<double>& p, double x) {
  const std::size_t knots = p.size() / 2;
  if (x <= p[0]) return p[1];
  for (std::size_t k = 1; k < knots; ++k) {
    const double xk = p[2 * k];
    if (x <= xk) {
      const double x_prev = p[2 * k - 2], y_prev = p[2 * k - 1], yk = p[2 * k + 1];
      const double w = (x - x_prev) / (xk - x_prev);
      return y_prev + w * (yk - y_prev);
    }
  }
  return p[2 * knots - 1];
}

}  // namespace

FunctionSpec make_function(FunctionFamily family, std::vector<double> params, FunctionRole role) {
  const auto [required, optional] = arity(family);
  if (family == FunctionFamily::piecewise_linear) {
    if (params.size() < 2 || params.size() % 2 != 0) {
      throw SpecError("piecewise_linear expects knot pairs [x0, y0, x1, y1, ...]");
    }
  } else if (params.size() < required || params.size() > required + optional) {
    std::ostringstream msg;
    msg << to_string(family) << " expects " << required;
    if (optional) msg << " to " << required + optional;
    msg << " parameters, got " << params.size();
    throw SpecError(msg.str());
  }
  if (family == FunctionFamily::saturating_hill) {
    if (params.size() < 2) params.push_back(1.0);
    if (params.size() < 3) params.push_back(1.0);
  }
  if (family == FunctionFamily::iterated_log && params.size() < 3) params.push_back(std::numbers::e);
  for (double v : params) {
    if (!std::isfinite(v)) throw SpecError(std::string(to_string(family)) + ": non-finite parameter");
  }
  return FunctionSpec{family, std::move(params), role};
}

double eval(const FunctionSpec& f, double x) {
  const auto& p = f.params;
  const bool at_inf = std::isinf(x);
  switch (f.family) {
    case FunctionFamily::constant:
      return p[0];
    case FunctionFamily::linear:
      return at_inf ? sign_infinity(p[0]) : p[0] * x;
    case FunctionFamily::affine:
      return at_inf ? (p[1] != 0 ? sign_infinity(p[1]) : p[0]) : p[0] + p[1] * x;
    case FunctionFamily::logistic:
      return at_inf ? sign_infinity(-p[0]) : p[0] * x * (1.0 - x / p[1]);
    case FunctionFamily::power:
      return at_inf ? sign_infinity(p[0]) : p[0] * std::pow(x, p[1]);
    case FunctionFamily::saturating_hill:
      return hill(p, x);
    case FunctionFamily::piecewise_linear:
      return piecewise(p, x);
    case FunctionFamily::log_boosted:
      return at_inf ? sign_infinity(p[0]) : p[0] * x * std::pow(1.0 + std::log1p(x), p[1]);
    case FunctionFamily::iterated_log: {
      if (at_inf) return sign_infinity(p[0]);
      const double ell = std::log(x + p[2]);
      return p[0] * x * ell * std::pow(std::log(ell), p[1]);
    }
  }
  return 0.0;
}

FunctionTraits traits(const FunctionSpec& f) {
  const auto& p = f.params;
  FunctionTraits t;
  t.value_at_zero = eval(f, 0.0);
  switch (f.family) {
    case FunctionFamily::constant:
      t.nonnegative = p[0] >= 0;
      t.identically_zero = p[0] == 0;
      break;
    case FunctionFamily::linear:
      t.nonnegative = t.nondecreasing = p[0] >= 0;
      t.bounded = t.identically_zero = p[0] == 0;
      t.asymptotic_slope = p[0];
      break;
    case FunctionFamily::affine:
      t.nonnegative = p[0] >= 0 && p[1] >= 0;
      t.nondecreasing = p[1] >= 0;
      t.bounded = p[1] == 0;
      t.identically_zero = p[0] == 0 && p[1] == 0;
      t.asymptotic_slope = p[1];
      break;
    case FunctionFamily::logistic:
      t.nonnegative = t.nondecreasing = t.bounded = t.identically_zero = p[0] == 0;
      t.concave = p[0] >= 0;
      t.asymptotic_slope = sign_infinity(-p[0]);
      break;
    case FunctionFamily::power:
      t.nonnegative = t.nondecreasing = p[0] >= 0;
      t.bounded = t.identically_zero = p[0] == 0;
      t.concave = p[0] == 0 || (p[0] > 0 ? p[1] <= 1 : p[1] >= 1);
      t.asymptotic_slope = p[1] < 1 ? 0.0 : (p[1] == 1 ? p[0] : sign_infinity(p[0]));
      break;
    case FunctionFamily::saturating_hill:
      t.nonnegative = t.nondecreasing = p[0] >= 0;
      t.concave = p[0] == 0 || (p[0] > 0 && p[2] <= 1);
      t.identically_zero = p[0] == 0;
      break;
    case FunctionFamily::piecewise_linear: {
      const std::size_t knots = p.size() / 2;
      double prev_slope = kInfinity;
      t.identically_zero = true;
      for (std::size_t k = 0; k < knots; ++k) {
        const double y = p[2 * k + 1];
        if (y < 0) t.nonnegative = false;
        if (y != 0) t.identically_zero = false;
        if (k > 0) {
          const double slope = (y - p[2 * k - 1]) / (p[2 * k] - p[2 * k - 2]);
          if (slope < 0) t.nondecreasing = false;
          if (slope > prev_slope) t.concave = false;
          prev_slope = slope;
        }
      }
      if (prev_slope < 0) t.concave = false;  // flat continuation after a decreasing piece
      break;
    }
    case FunctionFamily::log_boosted:
    case FunctionFamily::iterated_log:
      t.nonnegative = t.nondecreasing = p[0] >= 0;
      t.bounded = t.identically_zero = p[0] == 0;
      t.concave = p[0] <= 0 || (f.family == FunctionFamily::log_boosted && p[1] == 0);
      t.asymptotic_slope =
          (f.family == FunctionFamily::log_boosted && p[1] == 0) ? p[0] : sign_infinity(p[0]);
      break;
  }
  return t;
}

double upper_bound(const FunctionSpec& f, double lo, double hi) {
  double best = std::max(eval(f, lo), eval(f, hi));
  if (f.family == FunctionFamily::logistic) {
    const double vertex = 0.5 * f.params[1];
    if (vertex > lo && vertex < hi) best = std::max(best, eval(f, vertex));
  } else if (f.family == FunctionFamily::piecewise_linear) {
    for (std::size_t k = 0; k < f.params.size(); k += 2) {
      if (f.params[k] > lo && f.params[k] < hi) best = std::max(best, f.params[k + 1]);
    }
  }
  return best;
}

std::string_view to_string(FunctionFamily f) {
  switch (f) {
    case FunctionFamily::constant: return "constant";
    case FunctionFamily::linear: return "linear";
    case FunctionFamily::affine: return "affine";
    case FunctionFamily::logistic: return "logistic";
    case FunctionFamily::power: return "power";
    case FunctionFamily::saturating_hill: return "saturating-hill";
    case FunctionFamily::piecewise_linear: return "piecewise-linear";
    case FunctionFamily::log_boosted: return "log-boosted";
    case FunctionFamily::iterated_log: return "iterated-log";
  }
  return "?";
}

std::string_view to_string(FunctionRole r) {
  switch (r) {
    case FunctionRole::growth_g: return "growth-g";
    case FunctionRole::diffusion_sigma2: return "diffusion-sigma2";
    case FunctionRole::jump_rate_p: return "jump-rate-p";
    case FunctionRole::reservoir_rate_lambda: return "reservoir-rate-lambda";
    case FunctionRole::lysis_rate_r: return "lysis-rate-r";
  }
  return "?";
}

std::optional<FunctionFamily> function_family_from(std::string_view name) {
  for (auto f : {FunctionFamily::constant, FunctionFamily::linear, FunctionFamily::affine,
                 FunctionFamily::logistic, FunctionFamily::power, FunctionFamily::saturating_hill,
                 FunctionFamily::piecewise_linear, FunctionFamily::log_boosted,
                 FunctionFamily::iterated_log}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

JumpSizeLaw make_jump_law(JumpFamily family, std::vector<double> params, JumpRole role, double mass) {
  std::size_t expected = 0;
  switch (family) {
    case JumpFamily::point_mass: expected = 1; break;
    case JumpFamily::exponential: expected = 1; break;
    case JumpFamily::uniform_interval: expected = 2; break;
    case JumpFamily::truncated_pareto: expected = 3; break;
  }
  if (params.size() != expected) {
    std::ostringstream msg;
    msg << to_string(family) << " expects " << expected << " parameters, got " << params.size();
    throw SpecError(msg.str());
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw SpecError(std::string(to_string(family)) + ": non-finite parameter");
  }
  if (!std::isfinite(mass)) throw SpecError("jump measure mass must be finite");
  return JumpSizeLaw{family, std::move(params), mass, role};
}

namespace {
double pareto_normalizer(const std::vector<double>& p) {
  const double alpha = p[0], lo = p[1], hi = p[2];
  return -std::expm1(alpha * std::log(lo / hi));  // 1 - (lo/hi)^alpha
}

// alpha lo^alpha / Z * int_lo^hi z^(k - alpha - 1) dz
double pareto_moment(const std::vector<double>& p, double k) {
  const double alpha = p[0], lo = p[1], hi = p[2];
  const double c = alpha * std::pow(lo, alpha) / pareto_normalizer(p);
  const double e = k - alpha;
  if (std::abs(e) < 1e-12) return c * std::log(hi / lo);
  return c * (std::pow(hi, e) - std::pow(lo, e)) / e;
}
}  // namespace

double dose_mean(const JumpSizeLaw& law) {
  const auto& p = law.params;
  switch (law.family) {
    case JumpFamily::point_mass: return p[0];
    case JumpFamily::exponential: return p[0];
    case JumpFamily::uniform_interval: return 0.5 * (p[0] + p[1]);
    case JumpFamily::truncated_pareto: return pareto_moment(p, 1.0);
  }
  return 0.0;
}

double second_moment(const JumpSizeLaw& law) {
  const auto& p = law.params;
  switch (law.family) {
    case JumpFamily::point_mass: return p[0] * p[0];
    case JumpFamily::exponential: return 2.0 * p[0] * p[0];
    case JumpFamily::uniform_interval: return (p[0] * p[0] + p[0] * p[1] + p[1] * p[1]) / 3.0;
    case JumpFamily::truncated_pareto: return pareto_moment(p, 2.0);
  }
  return 0.0;
}

std::pair<double, double> support(const JumpSizeLaw& law) {
  const auto& p = law.params;
  switch (law.family) {
    case JumpFamily::point_mass: return {p[0], p[0]};
    case JumpFamily::exponential: return {0.0, kInfinity};
    case JumpFamily::uniform_interval: return {p[0], p[1]};
    case JumpFamily::truncated_pareto: return {p[1], p[2]};
  }
  return {0.0, 0.0};
}

double density(const JumpSizeLaw& law, double z) {
  const auto& p = law.params;
  const auto [lo, hi] = support(law);
  if (z < lo || z > hi) return 0.0;
  switch (law.family) {
    case JumpFamily::point_mass: return 0.0;
    case JumpFamily::exponential: return std::exp(-z / p[0]) / p[0];
    case JumpFamily::uniform_interval: return 1.0 / (p[1] - p[0]);
    case JumpFamily::truncated_pareto:
      return p[0] * std::pow(p[1], p[0]) * std::pow(z, -p[0] - 1.0) / pareto_normalizer(p);
  }
  return 0.0;
}

double sample(const JumpSizeLaw& law, DriverStream& s) {
  const auto& p = law.params;
  switch (law.family) {
    case JumpFamily::point_mass: return p[0];
    case JumpFamily::exponential: return p[0] * s.exponential();
    case JumpFamily::uniform_interval: return p[0] + (p[1] - p[0]) * s.uniform();
    case JumpFamily::truncated_pareto: {
      const double u = s.uniform();
      return p[1] * std::pow(1.0 - u * pareto_normalizer(p), -1.0 / p[0]);
    }
  }
  return 0.0;
}

std::string_view to_string(JumpFamily f) {
  switch (f) {
    case JumpFamily::point_mass: return "point-mass";
    case JumpFamily::exponential: return "exponential";
    case JumpFamily::uniform_interval: return "uniform-interval";
    case JumpFamily::truncated_pareto: return "truncated-pareto";
  }
  return "?";
}

std::string_view to_string(JumpRole r) {
  switch (r) {
    case JumpRole::parasite_jump_pi: return "parasite-jump-pi";
    case JumpRole::reservoir_dose_I: return "reservoir-dose-I";
    case JumpRole::lysis_dose_P: return "lysis-dose-P";
  }
  return "?";
}

std::optional<JumpFamily> jump_family_from(std::string_view name) {
  for (auto f : {JumpFamily::point_mass, JumpFamily::exponential, JumpFamily::uniform_interval,
                 JumpFamily::truncated_pareto}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

FragmentationLaw make_fragmentation(FragmentationFamily family, std::vector<double> params) {
  const std::size_t expected = family == FragmentationFamily::beta_symmetric ? 1 : 0;
  if (params.size() != expected) {
    std::ostringstream msg;
    msg << to_string(family) << " expects " << expected << " parameters, got " << params.size();
    throw SpecError(msg.str());
  }
  return FragmentationLaw{family, std::move(params)};
}

double theta_moment(const FragmentationLaw& kappa, double q) {
  switch (kappa.family) {
    case FragmentationFamily::beta_symmetric: {
      const double beta = kappa.params[0];
      if (q <= -beta) return kInfinity;
      // B(beta + q, beta) / B(beta, beta)
      return std::exp(std::lgamma(beta + q) + std::lgamma(2.0 * beta) - std::lgamma(beta) -
                      std::lgamma(2.0 * beta + q));
    }
    case FragmentationFamily::uniform01:
      return q > -1.0 ? 1.0 / (1.0 + q) : kInfinity;
    case FragmentationFamily::point_mass_half:
      return std::exp2(-q);
  }
  return kInfinity;
}

double mean_log_inverse(const FragmentationLaw& kappa) {
  switch (kappa.family) {
    case FragmentationFamily::beta_symmetric: {
      const double beta = kappa.params[0];
      return boost::math::digamma(2.0 * beta) - boost::math::digamma(beta);
    }
    case FragmentationFamily::uniform01: return 1.0;
    case FragmentationFamily::point_mass_half: return std::numbers::ln2;
  }
  return kInfinity;
}

double sample_theta(const FragmentationLaw& kappa, DriverStream& s) {
  switch (kappa.family) {
    case FragmentationFamily::beta_symmetric: {
      const double beta = kappa.params[0];
      for (;;) {
        const double a = s.gamma(beta);
        const double b = s.gamma(beta);
        const double theta = a / (a + b);
        if (theta > 0.0 && theta < 1.0) return theta;
      }
    }
    case FragmentationFamily::uniform01: return s.uniform();
    case FragmentationFamily::point_mass_half: return 0.5;
  }
  return 0.5;
}

std::string_view to_string(FragmentationFamily f) {
  switch (f) {
    case FragmentationFamily::beta_symmetric: return "beta-symmetric";
    case FragmentationFamily::uniform01: return "uniform01";
    case FragmentationFamily::point_mass_half: return "point-mass-half";
  }
  return "?";
}

std::optional<FragmentationFamily> fragmentation_family_from(std::string_view name) {
  for (auto f : {FragmentationFamily::beta_symmetric, FragmentationFamily::uniform01,
                 FragmentationFamily::point_mass_half}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void check_numerics(const NumericsSpec& n) {
  if (!(n.dt > 0.0) || !std::isfinite(n.dt)) throw SpecError("numerics.dt must be positive");
  if (!(n.T >= 0.0) || !std::isfinite(n.T)) throw SpecError("numerics.T must be non-negative");
  if (!(n.x_explode > 0.0)) throw SpecError("numerics.x_explode must be positive");
  if (n.max_cells == 0) throw SpecError("numerics.max_cells must be positive");
  if (n.replicates == 0) throw SpecError("numerics.replicates must be positive");
  if (!(n.tol_fp > 0.0)) throw SpecError("numerics.tol_fp must be positive");
  if (n.k_max_fp < 1) throw SpecError("numerics.k_max_fp must be at least 1");
  if (!(n.quad_tol > 0.0)) throw SpecError("numerics.quad_tol must be positive");
}

bool has_linear_growth(const ModelSpec& m) {
  const double g_slope = traits(m.g).asymptotic_slope;
  const double p_slope = traits(m.p).asymptotic_slope;
  const double l_slope = traits(m.lambda).asymptotic_slope;
  bool sigma_ok = true;
  if (m.sigma2.family == FunctionFamily::power) sigma_ok = m.sigma2.params[0] <= 0 || m.sigma2.params[1] <= 2;
  return g_slope < kInfinity && p_slope < kInfinity && l_slope < kInfinity && sigma_ok;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Clause c) {
  switch (c) {
    case Clause::growth_and_jump_rate: return "growth and jump rate";
    case Clause::diffusion: return "diffusion";
    case Clause::jump_measure: return "jump measure";
    case Clause::reinfection: return "reinfection";
    case Clause::fragmentation: return "fragmentation law";
    case Clause::structure: return "structure";
  }
  return "?";
}

bool ValidationReport::ok() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const ClauseResult& c) { return c.passed; });
}

const ClauseResult& ValidationReport::at(Clause c) const {
  for (const auto& r : clauses) {
    if (r.clause == c) return r;
  }
  throw std::out_of_range("clause not present in report");
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (const auto& c : clauses) {
    for (const auto& v : c.violations) out << to_string(c.clause) << ": " << v << '\n';
  }
  return out.str();
}

namespace {

class ClauseChecker {
 public:
  explicit ClauseChecker(Clause c) : result_{c, true, {}} {}
  void require(bool condition, std::string message) {
    if (!condition) {
      result_.passed = false;
      result_.violations.push_back(std::move(message));
    }
  }
  ClauseResult take() { return std::move(result_); }

 private:
  ClauseResult result_;
};

std::string fmt_value(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// Parameter-range problems that make a family meaningless.
void check_function_params(const FunctionSpec& f, std::string_view name, ClauseChecker& check) {
  const auto& p = f.params;
  const std::string prefix = std::string(name) + " (" + std::string(to_string(f.family)) + "): ";
  switch (f.family) {
    case FunctionFamily::logistic:
      check.require(p[1] > 0, prefix + "capacity must be positive");
      break;
    case FunctionFamily::power:
      check.require(p[1] > 0, prefix + "exponent must be positive");
      break;
    case FunctionFamily::saturating_hill:
      check.require(p[1] > 0, prefix + "half-saturation must be positive");
      check.require(p[2] > 0, prefix + "Hill exponent must be positive");
      break;
    case FunctionFamily::piecewise_linear:
      check.require(p[0] == 0.0, prefix + "first knot must sit at x = 0");
      for (std::size_t k = 2; k < p.size(); k += 2) {
        check.require(p[k] > p[k - 2], prefix + "knot abscissae must increase strictly");
      }
      break;
    case FunctionFamily::log_boosted:
      check.require(p[1] >= 0, prefix + "exponent must be non-negative");
      break;
    case FunctionFamily::iterated_log:
      check.require(p[1] >= 0, prefix + "exponent must be non-negative");
      check.require(p[2] >= std::numbers::e, prefix + "shift must be at least e");
      break;
    default:
      break;
  }
}

// Local Lipschitz continuity at the origin (elsewhere every family is smooth).
bool lipschitz_at_zero(const FunctionSpec& f) {
  if (f.family == FunctionFamily::power) return f.params[0] == 0 || f.params[1] >= 1;
  if (f.family == FunctionFamily::saturating_hill) return f.params[0] == 0 || f.params[2] >= 1;
  return true;
}

void check_role(const FunctionSpec& f, FunctionRole expected, std::string_view name,
                ClauseChecker& check) {
  check.require(f.role == expected, std::string(name) + " carries role tag " +
                                        std::string(to_string(f.role)) + ", expected " +
                                        std::string(to_string(expected)));
}

void check_law(const JumpSizeLaw& law, std::string_view name, ClauseChecker& check) {
  const auto& p = law.params;
  const std::string prefix = std::string(name) + " (" + std::string(to_string(law.family)) + "): ";
  switch (law.family) {
    case JumpFamily::point_mass:
      check.require(p[0] > 0, prefix + "atom must be positive (support in (0, inf))");
      break;
    case JumpFamily::exponential:
      check.require(p[0] > 0, prefix + "mean must be positive");
      break;
    case JumpFamily::uniform_interval:
      check.require(p[0] >= 0 && p[1] > p[0], prefix + "need 0 <= lo < hi (non-empty support)");
      break;
    case JumpFamily::truncated_pareto:
      check.require(p[0] > 0, prefix + "index must be positive");
      check.require(p[1] > 0 && p[2] > p[1], prefix + "need 0 < lo < hi (non-empty support)");
      break;
  }
}

}  // namespace

ValidationReport validate_model(const ModelSpec& s) {
  ValidationReport report;

  {
    ClauseChecker check(Clause::growth_and_jump_rate);
    check_role(s.g, FunctionRole::growth_g, "g", check);
    check_role(s.p, FunctionRole::jump_rate_p, "p", check);
    check_function_params(s.g, "g", check);
    check_function_params(s.p, "p", check);
    if (check.take().passed) {
      ClauseChecker inner(Clause::growth_and_jump_rate);
      const auto tg = traits(s.g);
      const auto tp = traits(s.p);
      inner.require(tg.value_at_zero == 0.0, "g(0)=0 violated: g(0)=" + fmt_value(tg.value_at_zero));
      inner.require(lipschitz_at_zero(s.g), "g is not Osgood-continuous at 0 (exponent below 1)");
      inner.require(tp.value_at_zero == 0.0, "p(0)=0 violated: p(0)=" + fmt_value(tp.value_at_zero));
      inner.require(tp.nonnegative, "p must be non-negative");
      inner.require(tp.nondecreasing, "p must be non-decreasing");
      inner.require(lipschitz_at_zero(s.p), "p is not locally Lipschitz at 0 (exponent below 1)");
      report.clauses.push_back(inner.take());
    } else {
      ClauseChecker again(Clause::growth_and_jump_rate);
      check_role(s.g, FunctionRole::growth_g, "g", again);
      check_role(s.p, FunctionRole::jump_rate_p, "p", again);
      check_function_params(s.g, "g", again);
      check_function_params(s.p, "p", again);
      report.clauses.push_back(again.take());
    }
  }

  {
    ClauseChecker check(Clause::diffusion);
    check_role(s.sigma2, FunctionRole::diffusion_sigma2, "sigma2", check);
    check_function_params(s.sigma2, "sigma2", check);
    const auto t = traits(s.sigma2);
    check.require(t.value_at_zero == 0.0,
                  "sigma(0)=0 violated: sigma2(0)=" + fmt_value(t.value_at_zero));
    check.require(t.nonnegative, "sigma2 must be non-negative");
    check.require(lipschitz_at_zero(s.sigma2),
                  "sqrt(sigma2) is not 1/2-Hoelder at 0 (exponent below 1)");
    report.clauses.push_back(check.take());
  }

  {
    ClauseChecker check(Clause::jump_measure);
    check.require(s.pi.role == JumpRole::parasite_jump_pi, "pi carries the wrong role tag");
    check.require(s.pi.mass >= 0, "pi must have non-negative total mass");
    check_law(s.pi, "pi", check);
    report.clauses.push_back(check.take());
  }

  {
    ClauseChecker check(Clause::reinfection);
    check_role(s.r, FunctionRole::lysis_rate_r, "r", check);
    check_role(s.lambda, FunctionRole::reservoir_rate_lambda, "lambda", check);
    check_function_params(s.r, "r", check);
    check_function_params(s.lambda, "lambda", check);
    const auto tr = traits(s.r);
    const auto tl = traits(s.lambda);
    check.require(tr.value_at_zero == 0.0, "r(0)=0 violated: r(0)=" + fmt_value(tr.value_at_zero));
    check.require(tr.nonnegative, "r must be non-negative");
    check.require(tr.nondecreasing, "r must be non-decreasing");
    check.require(tr.bounded, "r must be bounded");
    check.require(tl.nonnegative, "lambda must be non-negative");
    check.require(s.doseI.role == JumpRole::reservoir_dose_I, "doseI carries the wrong role tag");
    check.require(s.doseP.role == JumpRole::lysis_dose_P, "doseP carries the wrong role tag");
    check.require(s.doseI.mass == 1.0, "doseI must be a probability law (mass 1)");
    check.require(s.doseP.mass == 1.0, "doseP must be a probability law (mass 1)");
    check_law(s.doseI, "doseI", check);
    check_law(s.doseP, "doseP", check);
    report.clauses.push_back(check.take());
  }

  {
    ClauseChecker check(Clause::fragmentation);
    if (s.kappa.family == FragmentationFamily::beta_symmetric) {
      check.require(!s.kappa.params.empty() && s.kappa.params[0] > 0,
                    "beta-symmetric parameter must be positive");
    }
    if (check.take().passed) {
      ClauseChecker inner(Clause::fragmentation);
      const double mli = mean_log_inverse(s.kappa);
      inner.require(std::isfinite(mli), "E[ln(1/Theta)] must be finite");
      report.clauses.push_back(inner.take());
    } else {
      ClauseChecker again(Clause::fragmentation);
      again.require(false, "beta-symmetric parameter must be positive");
      report.clauses.push_back(again.take());
    }
  }

  {
    ClauseChecker check(Clause::structure);
    check.require(s.b > 0 && std::isfinite(s.b), "division rate b must be positive and finite");
    check.require(s.d >= 0 && std::isfinite(s.d), "death rate d must be non-negative and finite");
    check.require(s.x0 >= 0 && std::isfinite(s.x0), "initial load x0 must be non-negative and finite");
    report.clauses.push_back(check.take());
  }

  return report;
}

}  // namespace parasim
