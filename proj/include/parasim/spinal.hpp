#pragma once

// The spinal (auxiliary) process, its frozen-rate and reinfection-free
// variants, the mean-field fixed point m(t) = E[Y_t], and monotone couplings.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "parasim/model.hpp"
#include "parasim/rng.hpp"
#include "parasim/sde.hpp"
#include "parasim/stats.hpp"

namespace parasim {

enum class VariantTag { Y, Ybar, Ytilde, Ytildetilde };

struct SpinalVariant {
  VariantTag tag = VariantTag::Y;
  double ybar = 0.0;          ///< frozen lysis argument (Ybar)
  double lambda_floor = 0.0;  ///< constant reservoir rate (Ytildetilde)

  static SpinalVariant Y() { return {VariantTag::Y, 0.0, 0.0}; }
  static SpinalVariant Ybar(double ybar) { return {VariantTag::Ybar, ybar, 0.0}; }
  static SpinalVariant Ytilde() { return {VariantTag::Ytilde, 0.0, 0.0}; }
  static SpinalVariant Ytildetilde(double floor) { return {VariantTag::Ytildetilde, 0.0, floor}; }

  bool operator==(const SpinalVariant&) const = default;
};

/// Throws SpecError for ybar < 0 or lambda_floor <= 0.
void check_variant(const SpinalVariant& v);
std::string to_string(const SpinalVariant& v);

/// m(t) on a time grid. Between grid points the value of the left grid point
/// is held (piecewise constant, left-continuous at jumps of the curve).
struct MeanFieldCurve {
  std::vector<double> grid;
  std::vector<double> values;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::string note;

  double at(double t) const;
  bool exploded() const;
};

/// Uniform grid 0 = t_0 < ... < t_K = T.
std::vector<double> uniform_grid(double T, std::size_t K);

void write_mean_field_csv(std::ostream& out, const MeanFieldCurve& curve);
/// Inverse of write_mean_field_csv. Throws SpecError on malformed input.
MeanFieldCurve read_mean_field_csv(std::istream& in);

enum class SpinalEventKind { division, reservoir_dose, lysis_dose, parasite_jump };
std::string_view to_string(SpinalEventKind k);

struct SpinalEvent {
  SpinalEventKind kind;
  double time;
  double magnitude;  ///< theta for divisions, the added amount otherwise
};

struct SpinalTrajectory {
  std::vector<double> times;  ///< recording grid
  std::vector<double> loads;  ///< Y at the recording grid (+inf once exploded)
  std::vector<SpinalEvent> events;
  bool exploded = false;
  std::optional<double> explosion_time;
  double running_sup = 0.0;
  FlowDiagnostics diagnostics;
};

/// Simulates one spinal path on [0, T]. Drivers derive from `id`.
/// Variant Y needs `mf` unless r vanishes identically. `record_times`
/// defaults to 101 equispaced points.
SpinalTrajectory simulate_spinal(const SpinalVariant& variant, double x0, double T,
                                 const MeanFieldCurve* mf, const ModelSpec& model,
                                 const NumericsSpec& numerics, const StreamId& id,
                                 std::vector<double> record_times = {});

/// Picard iteration for m(t) = E[Y_t] with common random numbers. Uses
/// numerics.replicates paths, tol_fp, k_max_fp and the master seed.
MeanFieldCurve solve_mean_field(const ModelSpec& model, double x0, double T,
                                const std::vector<double>& grid, const NumericsSpec& numerics);

/// Pair of spines driven by shared drivers.
struct CoupledPair {
  SpinalTrajectory a;
  SpinalTrajectory b;
  /// Grid points with a > b + eps.
  std::size_t violations = 0;
};

/// Throws SpecError when the ordering preconditions fail.
void check_coupling(const SpinalVariant& va, double x0a, const ModelSpec& ma,
                    const SpinalVariant& vb, double x0b, const ModelSpec& mb);

CoupledPair couple(const SpinalVariant& va, double x0a, const ModelSpec& ma,
                   const SpinalVariant& vb, double x0b, const ModelSpec& mb, double T,
                   const MeanFieldCurve* mf, const NumericsSpec& numerics, const StreamId& id,
                   std::vector<double> record_times = {}, double eps = 1e-9);

/// Path functionals F used on both sides of the Many-to-One formula.
struct Functional {
  enum class Kind { one, indicator_ge, identity, sup_le, grid_function };
  Kind kind = Kind::one;
  double K = 0.0;
  std::vector<double> xs, ys;  ///< grid_function knots (linear, flat outside)

  static Functional one() { return {Kind::one, 0.0, {}, {}}; }
  static Functional indicator_ge(double K) { return {Kind::indicator_ge, K, {}, {}}; }
  static Functional identity() { return {Kind::identity, 0.0, {}, {}}; }
  static Functional sup_le(double K) { return {Kind::sup_le, K, {}, {}}; }
  static Functional grid_function(std::vector<double> xs, std::vector<double> ys);

  /// F evaluated on a terminal load x whose path supremum is `sup`.
  double operator()(double x, double sup) const;
  bool bounded() const { return kind != Kind::identity; }
  std::string name() const;
};

/// E[F(Y)] at time t over numerics.replicates paths.
Estimate spinal_expectation(const Functional& F, const SpinalVariant& variant, double t,
                            const ModelSpec& model, const MeanFieldCurve* mf,
                            const NumericsSpec& numerics, std::string_view purpose = "spine");

/// Mean number of spinal divisions over [0, t] (rate check).
Estimate spinal_division_count(const ModelSpec& model, double x0, double t,
                               const NumericsSpec& numerics);

}  // namespace parasim
