#pragma once

// Regime functionals and their numerical checks: rho, I_a, D(a, x), G_a,
// membership in the admissible exponent set, the SN/LN tail heuristics,
// the martingale check for Z^(a), explosion frequencies and the l-schedule.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "parasim/model.hpp"
#include "parasim/spinal.hpp"
#include "parasim/stats.hpp"

namespace parasim {

inline constexpr const char* kHeuristicMarker = "heuristic over finite grid";

/// E[I] lambda(x) + E[P] r(x) + g(x) - b x.
double rho(double x, const ModelSpec& model);

/// a x^-2 int z^2 int_0^1 (1 + z v / x)^(-1-a) (1 - v) dv pi(dz), nested
/// adaptive quadrature. Throws SpecError for a <= 0 or x <= 0.
double I_a(double a, double x, const JumpSizeLaw& pi, double quad_tol);

/// E[((1 + J/x)^(1-a) - 1)/(1-a)] for a dose law J (log limit at a = 1).
double dose_power_term(double a, double x, const JumpSizeLaw& dose, double quad_tol);

/// g/x - a sigma^2/x^2 - p I_a + lambda E[((1 + I/x)^(1-a) - 1)/(1-a)].
double D(double a, double x, const ModelSpec& model, double quad_tol);

/// The exponent rate G_a at load x with the lysis argument r_arg = m(t).
/// Throws SpecError unless a is in (0,1) or admissible (a > 1, finite moment).
double G_a(double a, double x, double r_arg, const ModelSpec& model, double quad_tol);

/// True iff E[Theta^(1-a)] < inf. Throws SpecError for a <= 1.
bool in_A(double a, const FragmentationLaw& kappa);

/// Log-spaced grid of n points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

enum class Verdict { sn_consistent, ln_consistent, inconclusive };
std::string_view to_string(Verdict v);

struct TailCheck {
  Verdict verdict = Verdict::inconclusive;
  double slope = 0.0;     ///< regression slope of D against ln x over the upper half of the grid
  double slope_se = 0.0;
  std::optional<double> x0;  ///< LN: start of the terminal run satisfying the bound
  std::size_t run = 0;
  std::string marker = kHeuristicMarker;
};

/// SN heuristic for a in (0,1). The grid must reach 1e10.
TailCheck check_SN(const ModelSpec& model, double a, const std::vector<double>& grid,
                   double quad_tol = 1e-10, double slope_tol = 1e-2);
/// LN heuristic for admissible a > 1 and eta > 0. The grid must reach 1e10.
TailCheck check_LN(const ModelSpec& model, double a, double eta, const std::vector<double>& grid,
                   double quad_tol = 1e-10);

struct CriteriaReport {
  std::vector<double> grid;
  std::vector<double> rho;
  std::vector<double> D;
  std::vector<double> G;
  double a = 0.5;
  double eta = 0.5;
  double r_arg = 0.0;
  double quad_tol = 1e-10;
  std::optional<bool> in_A;  ///< only for a > 1
  TailCheck check;
  /// Optional scan over standard exponents: (a, verdict).
  std::vector<std::pair<double, Verdict>> scan;
};

CriteriaReport criteria_report(const ModelSpec& model, double a, double eta,
                               const std::vector<double>& grid, double r_arg, double quad_tol,
                               bool scan = false);

nlohmann::json to_json(const CriteriaReport& report);
void write_criteria_csv(std::ostream& out, const CriteriaReport& report);

/// G_a with tabulated quadrature parts on a log grid over [lo, hi].
class GaEvaluator {
 public:
  GaEvaluator(const ModelSpec& model, double a, double lo, double hi, double quad_tol,
              std::size_t nodes = 2049);
  double operator()(double x, double r_arg) const;

 private:
  double part(const std::vector<double>& table, double x, int which) const;
  double direct(double x, int which) const;

  const ModelSpec* model_;
  double a_, quad_tol_, log_lo_, log_hi_, step_;
  double frag_;  ///< 2b (1 - E[Theta^(1-a)]) / (1-a)
  bool p_on_, lambda_on_, r_on_;
  std::vector<double> I_table_, J_table_, K_table_;
};

struct MartingaleCheckResult {
  double a = 0.0;
  double c = 0.0, b_high = 0.0;
  double target = 0.0;  ///< x0^(1-a)
  std::vector<double> times;
  std::vector<Estimate> estimates;
  std::vector<double> z;
  double max_abs_z = 0.0;
  std::size_t exited = 0;  ///< paths stopped at the corridor before the last time
};

MartingaleCheckResult martingale_Za_check(double a, double c, double b_high,
                                          const std::vector<double>& t_grid, const ModelSpec& model,
                                          double x0, const MeanFieldCurve* mf,
                                          const NumericsSpec& numerics, double quad_tol = 1e-10);

/// Fraction of spinal paths exploded by T. Solves the mean field first when
/// r is not identically zero and no curve is supplied.
Estimate explosion_probability(const ModelSpec& model, double x0, double T, const MeanFieldCurve* mf,
                               const NumericsSpec& numerics);

struct LSchedule {
  double value = 0.0;  ///< midpoint of the bracket
  double lower = 0.0;
  double upper = 0.0;
  std::size_t terms = 0;
};

/// sum_{n>=1} ((n-1) ln(1+delta) + ln ln b)^-(1+eta), summed until the
/// integral tail bracket is narrower than tol.
LSchedule l_schedule(double b_frak, double delta, double eta, double tol);

}  // namespace parasim
