#pragma once

// The branching cell population with parasite loads (Ulam-Harris labelled),
// the exact birth-death law of the cell count, and population statistics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "parasim/model.hpp"
#include "parasim/rng.hpp"
#include "parasim/sde.hpp"
#include "parasim/spinal.hpp"
#include "parasim/stats.hpp"

namespace parasim {

struct Cell {
  std::string label;  ///< word over {0,1}; the root is empty
  double x = 0.0;
  bool exploded = false;
  double sup = 0.0;   ///< running supremum of the load along the ancestral path
};

enum class PopEventKind { division, death, reservoir_dose, lysis_dose };
std::string_view to_string(PopEventKind k);

struct PopEvent {
  PopEventKind kind;
  double time;
  std::string label;
  double magnitude;  ///< theta for divisions, dose for doses, load at death
};

struct PopulationSnapshot {
  double time;
  std::vector<Cell> cells;
};

struct PopulationOptions {
  std::vector<double> snapshot_times;
  bool record_events = false;
  /// Keep copies of the living cells at each snapshot time.
  bool keep_snapshots = true;
  /// Called at each snapshot time with the living cells (optional).
  std::function<void(std::size_t index, double time, const std::vector<Cell>&)> on_snapshot;
};

struct Population {
  double time = 0.0;
  std::vector<Cell> living;
  std::vector<PopEvent> log;
  std::vector<PopulationSnapshot> snapshots;
  bool extinct = false;
  bool cap_hit = false;  ///< partial result: more than max_cells cells alive
  FlowDiagnostics diagnostics;
  std::size_t N() const { return living.size(); }
};

/// Fixed-step first-order event scheme with per-cell sub-stepping. `mf` is
/// needed unless r vanishes identically.
Population simulate_population(const ModelSpec& model, double x0, double T,
                               const MeanFieldCurve* mf, const NumericsSpec& numerics,
                               const StreamId& id, const PopulationOptions& options = {});

/// CSV columns time,label,load,exploded.
void write_snapshot_csv(std::ostream& out, const std::vector<PopulationSnapshot>& snapshots);
/// CSV columns time,kind,label,magnitude.
void write_event_log_csv(std::ostream& out, const std::vector<PopEvent>& log);

// ---------------------------------------------------------------------------
// Birth-death law of N_t

struct BirthDeathLaw {
  double alpha;  ///< P(N_t = 0)
  double beta;   ///< geometric ratio of the law on {1, 2, ...}
};

/// Throws SpecError for b = d, b <= 0, d < 0 or t < 0.
BirthDeathLaw birth_death_law(double b, double d, double t);
double birth_death_pmf(double b, double d, double t, std::uint64_t n);
std::uint64_t sample_N(double b, double d, double t, DriverStream& s);

// ---------------------------------------------------------------------------
// Many-to-One and survival statistics

struct ManyToOneResult {
  Estimate lhs;  ///< e^{-(b-d)t} E[sum_u F(X^u_t)]
  Estimate rhs;  ///< E[F(Y_t)]
  double z = 0.0;
  std::size_t capped = 0;
};

/// Population side uses `pop` (replicates, seed), the spine side `spine`.
ManyToOneResult many_to_one_check(const Functional& F, double t, const ModelSpec& model,
                                  const MeanFieldCurve* mf, const NumericsSpec& pop,
                                  const NumericsSpec& spine);
/// Several functionals evaluated on the same simulated populations and spines.
std::vector<ManyToOneResult> many_to_one_check(const std::vector<Functional>& Fs, double t,
                                               const ModelSpec& model, const MeanFieldCurve* mf,
                                               const NumericsSpec& pop, const NumericsSpec& spine);

/// Per-replicate records and aggregates of population fractions.
struct SurvivalStats {
  std::vector<double> times;
  std::vector<double> thresholds;  ///< K values
  std::size_t replicates = 0;
  std::size_t capped = 0;

  // raw[(i * T + j) * K + k] for replicate i, time j, threshold k
  std::vector<double> at_least_raw;   ///< 1{N>=1} sum 1{X >= K} / N
  std::vector<double> sup_within_raw; ///< 1{N>=1} sum 1{sup X <= K} / N
  std::vector<double> finite_raw;     ///< [(i * T + j)]: 1{N>=1} sum 1{X < inf} / N
  std::vector<double> alive_raw;      ///< [(i * T + j)]: 1{N>=1}
  std::vector<double> count_raw;      ///< [(i * T + j)]: N_t

  Estimate at_least(std::size_t j, std::size_t k) const;
  Estimate sup_within(std::size_t j, std::size_t k) const;
  Estimate finite(std::size_t j) const;
  Estimate alive(std::size_t j) const;
  Estimate count(std::size_t j) const;

  /// rows[i][j] = at-least fraction of replicate i at time j for threshold k.
  std::vector<std::vector<double>> at_least_rows_over_time(std::size_t k) const;
  /// rows[i][k] at fixed time j.
  std::vector<std::vector<double>> at_least_rows_over_threshold(std::size_t j) const;
  std::vector<std::vector<double>> sup_within_rows_over_time(std::size_t k) const;
  std::vector<std::vector<double>> finite_rows_over_time() const;
};

SurvivalStats survival_fraction_stats(const ModelSpec& model, double x0, const MeanFieldCurve* mf,
                                      std::vector<double> times, std::vector<double> thresholds,
                                      const NumericsSpec& numerics,
                                      std::string_view purpose = "survival");

/// Empirical pmf of N_T from simulate_population (index n = count n).
std::vector<double> population_count_pmf(const ModelSpec& model, double T, const MeanFieldCurve* mf,
                                         const NumericsSpec& numerics, std::size_t* capped = nullptr);

}  // namespace parasim
