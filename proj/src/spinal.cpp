#include "parasim/spinal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "parasim/csv.hpp"
#include "parasim/parallel.hpp"
#include "spine_stepper.hpp"

namespace parasim {

void check_variant(const SpinalVariant& v) {
  if (v.tag == VariantTag::Ybar && !(v.ybar >= 0.0 && std::isfinite(v.ybar))) {
    throw SpecError("Ybar requires a finite ybar >= 0");
  }
  if (v.tag == VariantTag::Ytildetilde && !(v.lambda_floor > 0.0 && std::isfinite(v.lambda_floor))) {
    throw SpecError("Ytildetilde requires a finite lambda_floor > 0");
  }
}

std::string to_string(const SpinalVariant& v) {
  switch (v.tag) {
    case VariantTag::Y: return "Y";
    case VariantTag::Ybar: return "Ybar(" + format_double(v.ybar) + ")";
    case VariantTag::Ytilde: return "Ytilde";
    case VariantTag::Ytildetilde: return "Ytildetilde(" + format_double(v.lambda_floor) + ")";
  }
  return "?";
}

double MeanFieldCurve::at(double t) const {
  if (grid.empty()) return 0.0;
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return values.front();
  return values[static_cast<std::size_t>(it - grid.begin()) - 1];
}

bool MeanFieldCurve::exploded() const {
  return std::any_of(values.begin(), values.end(), [](double v) { return std::isinf(v); });
}

std::vector<double> uniform_grid(double T, std::size_t K) {
  if (K == 0) return {0.0};
  std::vector<double> g(K + 1);
  for (std::size_t j = 0; j <= K; ++j) g[j] = T * static_cast<double>(j) / static_cast<double>(K);
  g[K] = T;
  return g;
}

void write_mean_field_csv(std::ostream& out, const MeanFieldCurve& curve) {
  CsvWriter csv(out);
  csv.row("time", "value", "converged", "iterations", "residual");
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    csv.row(curve.grid[j], curve.values[j], curve.converged, curve.iterations, curve.residual);
  }
}

MeanFieldCurve read_mean_field_csv(std::istream& in) {
  const auto rows = read_csv(in);
  if (rows.empty() || rows.front().size() != 5 || rows.front()[0] != "time" ||
      rows.front()[1] != "value") {
    throw SpecError("mean-field CSV: expected header time,value,converged,iterations,residual");
  }
  MeanFieldCurve curve;
  try {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() == 1 && r[0].empty()) continue;
      if (r.size() != 5) throw SpecError("mean-field CSV: row " + std::to_string(i) + " has wrong width");
      curve.grid.push_back(parse_double(r[0]));
      curve.values.push_back(parse_double(r[1]));
      curve.converged = r[2] == "1";
      curve.iterations = std::stoi(r[3]);
      curve.residual = parse_double(r[4]);
    }
  } catch (const std::invalid_argument&) {
    throw SpecError("mean-field CSV: unparsable number");
  }
  if (curve.grid.empty()) throw SpecError("mean-field CSV: no data rows");
  for (std::size_t j = 1; j < curve.grid.size(); ++j) {
    if (!(curve.grid[j] > curve.grid[j - 1])) throw SpecError("mean-field CSV: times must increase");
  }
  return curve;
}

std::string_view to_string(SpinalEventKind k) {
  switch (k) {
    case SpinalEventKind::division: return "division";
    case SpinalEventKind::reservoir_dose: return "reservoir-dose";
    case SpinalEventKind::lysis_dose: return "lysis-dose";
    case SpinalEventKind::parasite_jump: return "parasite-jump";
  }
  return "?";
}

namespace {

void require_curve(const SpinalVariant& v, const MeanFieldCurve* mf, const ModelSpec& model) {
  check_variant(v);
  if (v.tag == VariantTag::Y && !mf && !traits(model.r).identically_zero) {
    throw SpecError("variant Y with a non-zero lysis rate needs a mean-field curve");
  }
}

std::vector<double> default_record(double T, std::vector<double> record) {
  if (record.empty()) return uniform_grid(T, 100);
  std::sort(record.begin(), record.end());
  return record;
}

struct TrajectoryRecorder : detail::ObserverBase {
  explicit TrajectoryRecorder(std::size_t lanes, std::vector<detail::Lane>* l) : out(lanes), lanes_(l) {}
  void on_event(std::size_t i, SpinalEventKind k, double t, double mag, double, double) {
    out[i].events.push_back({k, t, mag});
  }
  void on_stop(std::size_t, double t) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].times.push_back(t);
      out[i].loads.push_back((*lanes_)[i].x);
    }
  }
  std::vector<SpinalTrajectory> out;
  std::vector<detail::Lane>* lanes_;
};

void finish(SpinalTrajectory& tr, const detail::Lane& lane) {
  tr.exploded = lane.exploded;
  if (lane.exploded) tr.explosion_time = lane.explosion_time;
  tr.running_sup = lane.sup;
  tr.diagnostics = lane.diagnostics;
}

}  // namespace

SpinalTrajectory simulate_spinal(const SpinalVariant& variant, double x0, double T,
                                 const MeanFieldCurve* mf, const ModelSpec& model,
                                 const NumericsSpec& numerics, const StreamId& id,
                                 std::vector<double> record_times) {
  require_curve(variant, mf, model);
  const auto stops = default_record(T, std::move(record_times));
  std::vector<detail::Lane> lanes;
  lanes.emplace_back(model, variant, x0, numerics.x_explode);
  detail::SpineDrivers drivers(id);
  TrajectoryRecorder rec(1, &lanes);
  detail::run_spine(lanes, T, mf, numerics.dt, stops, drivers, rec);
  finish(rec.out[0], lanes[0]);
  return std::move(rec.out[0]);
}

namespace {

struct GridRecorder : detail::ObserverBase {
  GridRecorder(double* row, const detail::Lane* lane) : row_(row), lane_(lane) {}
  void on_stop(std::size_t k, double) { row_[k] = lane_->x; }
  double* row_;
  const detail::Lane* lane_;
};

constexpr double kExplodedWeight = 1e-3;

}  // namespace

MeanFieldCurve solve_mean_field(const ModelSpec& model, double x0, double T,
                                const std::vector<double>& grid, const NumericsSpec& numerics) {
  check_numerics(numerics);
  if (grid.empty() || grid.front() != 0.0) throw SpecError("mean-field grid must start at 0");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) throw SpecError("mean-field grid must increase strictly");
  }
  if (grid.back() > T * (1 + 1e-12)) throw SpecError("mean-field grid extends past T");
  if (numerics.replicates < 1000) throw SpecError("mean-field solve needs at least 1000 replicates");

  const std::size_t M = numerics.replicates;
  const std::size_t K = grid.size();
  const bool feedback = !traits(model.r).identically_zero;

  MeanFieldCurve current;
  current.grid = grid;
  current.values.assign(K, x0);

  std::vector<double> loads(M * K);
  auto pass = [&](const MeanFieldCurve& curve, MeanFieldCurve& next) {
    for_each_replicate(M, numerics.workers, [&](std::size_t i) {
      std::vector<detail::Lane> lanes;
      lanes.emplace_back(model, SpinalVariant::Y(), x0, numerics.x_explode);
      detail::SpineDrivers drivers(StreamId{numerics.master_seed, "mean-field", i});
      GridRecorder rec(&loads[i * K], &lanes[0]);
      detail::run_spine(lanes, grid.back(), &curve, numerics.dt, grid, drivers, rec);
    });
    next.grid = grid;
    next.values.assign(K, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
      double sum = 0.0;
      std::size_t finite = 0;
      for (std::size_t i = 0; i < M; ++i) {
        const double v = loads[i * K + j];
        if (std::isinf(v)) continue;
        sum += v;
        ++finite;
      }
      const double exploded = static_cast<double>(M - finite) / static_cast<double>(M);
      if (exploded > kExplodedWeight) {
        std::fill(next.values.begin() + static_cast<std::ptrdiff_t>(j), next.values.end(), kInfinity);
        std::ostringstream note;
        note << "explosive regime: exploded path weight " << exploded << " exceeds " << kExplodedWeight
             << " at t=" << grid[j] << "; curve set to +inf from there on";
        next.note = note.str();
        return false;
      }
      next.values[j] = finite ? sum / static_cast<double>(finite) : kInfinity;
      if (exploded > 0.0 && next.note.empty()) {
        std::ostringstream note;
        note << "exploded paths (weight " << exploded << " <= " << kExplodedWeight
             << ") excluded from the mean from t=" << grid[j];
        next.note = note.str();
      }
    }
    return true;
  };

  for (int k = 0; k < numerics.k_max_fp; ++k) {
    MeanFieldCurve next;
    if (!pass(current, next)) {
      next.converged = false;
      next.iterations = k + 1;
      next.residual = kInfinity;
      return next;
    }
    double residual = 0.0;
    for (std::size_t j = 0; j < K; ++j) residual = std::max(residual, std::abs(next.values[j] - current.values[j]));
    if (!feedback) {
      next.converged = true;
      next.iterations = 1;
      next.residual = 0.0;
      return next;
    }
    if (k > 0 && residual <= numerics.tol_fp) {
      next.converged = true;
      next.iterations = k;
      next.residual = residual;
      return next;
    }
    next.residual = residual;
    current = std::move(next);
  }
  current.converged = false;
  current.iterations = numerics.k_max_fp;
  return current;
}

// ---------------------------------------------------------------------------

void check_coupling(const SpinalVariant& va, double x0a, const ModelSpec& ma,
                    const SpinalVariant& vb, double x0b, const ModelSpec& mb) {
  check_variant(va);
  check_variant(vb);
  if (!(va == vb)) throw SpecError("coupling requires the same spinal variant on both sides");
  if (!(x0a <= x0b)) throw SpecError("coupling requires x0A <= x0B");
  if (!(ma.sigma2 == mb.sigma2 && ma.p == mb.p && ma.r == mb.r && ma.pi == mb.pi &&
        ma.doseI == mb.doseI && ma.doseP == mb.doseP && ma.kappa == mb.kappa && ma.b == mb.b &&
        ma.d == mb.d)) {
    throw SpecError("coupled models may differ only in g, lambda and x0");
  }
  std::vector<double> xs{0.0};
  for (int k = -60; k <= 120; ++k) xs.push_back(std::pow(10.0, k / 10.0));
  for (double x : xs) {
    const double ga = eval(ma.g, x), gb = eval(mb.g, x);
    if (ga > gb + 1e-12 * std::max(1.0, std::abs(gb))) {
      throw SpecError("coupling requires gA <= gB pointwise (fails at x=" + format_double(x) + ")");
    }
    const double la = eval(ma.lambda, x), lb = eval(mb.lambda, x);
    if (la > lb + 1e-12 * std::max(1.0, std::abs(lb))) {
      throw SpecError("coupling requires lambdaA <= lambdaB pointwise (fails at x=" +
                      format_double(x) + ")");
    }
  }
  if (!traits(ma.lambda).nondecreasing && !traits(mb.lambda).nondecreasing) {
    throw SpecError("coupling requires lambdaA or lambdaB to be non-decreasing");
  }
}

CoupledPair couple(const SpinalVariant& va, double x0a, const ModelSpec& ma,
                   const SpinalVariant& vb, double x0b, const ModelSpec& mb, double T,
                   const MeanFieldCurve* mf, const NumericsSpec& numerics, const StreamId& id,
                   std::vector<double> record_times, double eps) {
  check_coupling(va, x0a, ma, vb, x0b, mb);
  require_curve(va, mf, ma);
  const auto stops = default_record(T, std::move(record_times));
  std::vector<detail::Lane> lanes;
  lanes.emplace_back(ma, va, x0a, numerics.x_explode);
  lanes.emplace_back(mb, vb, x0b, numerics.x_explode);
  detail::SpineDrivers drivers(id);
  TrajectoryRecorder rec(2, &lanes);
  detail::run_spine(lanes, T, mf, numerics.dt, stops, drivers, rec);
  CoupledPair pair{std::move(rec.out[0]), std::move(rec.out[1]), 0};
  finish(pair.a, lanes[0]);
  finish(pair.b, lanes[1]);
  for (std::size_t k = 0; k < pair.a.loads.size(); ++k) {
    const double a = pair.a.loads[k], b = pair.b.loads[k];
    if (std::isinf(b)) continue;
    if (a > b + eps) ++pair.violations;
  }
  return pair;
}

// ---------------------------------------------------------------------------

Functional Functional::grid_function(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || xs.size() != ys.size()) throw SpecError("grid functional needs matching non-empty knots");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw SpecError("grid functional knots must increase");
  }
  return {Kind::grid_function, 0.0, std::move(xs), std::move(ys)};
}

double Functional::operator()(double x, double sup) const {
  switch (kind) {
    case Kind::one: return 1.0;
    case Kind::indicator_ge: return x >= K ? 1.0 : 0.0;
    case Kind::identity: return x;
    case Kind::sup_le: return sup <= K ? 1.0 : 0.0;
    case Kind::grid_function: {
      if (x <= xs.front()) return ys.front();
      if (x >= xs.back()) return ys.back();
      const auto it = std::upper_bound(xs.begin(), xs.end(), x);
      const std::size_t j = static_cast<std::size_t>(it - xs.begin());
      const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
      return ys[j - 1] + w * (ys[j] - ys[j - 1]);
    }
  }
  return 0.0;
}

std::string Functional::name() const {
  switch (kind) {
    case Kind::one: return "1";
    case Kind::indicator_ge: return "1{x>=" + format_double(K) + "}";
    case Kind::identity: return "x";
    case Kind::sup_le: return "1{sup<=" + format_double(K) + "}";
    case Kind::grid_function: return "grid-function";
  }
  return "?";
}

namespace {
struct TerminalObserver : detail::ObserverBase {};
}  // namespace

Estimate spinal_expectation(const Functional& F, const SpinalVariant& variant, double t,
                            const ModelSpec& model, const MeanFieldCurve* mf,
                            const NumericsSpec& numerics, std::string_view purpose) {
  require_curve(variant, mf, model);
  const std::size_t M = numerics.replicates;
  std::vector<double> values(M, 1.0);
  if (F.kind != Functional::Kind::one) {
    const std::vector<double> no_stops;
    for_each_replicate(M, numerics.workers, [&](std::size_t i) {
      std::vector<detail::Lane> lanes;
      lanes.emplace_back(model, variant, model.x0, numerics.x_explode);
      detail::SpineDrivers drivers(StreamId{numerics.master_seed, std::string(purpose), i});
      TerminalObserver obs;
      detail::run_spine(lanes, t, mf, numerics.dt, no_stops, drivers, obs);
      values[i] = F(lanes[0].x, lanes[0].sup);
    });
  }
  return estimate_mean(values);
}

namespace {
struct DivisionCounter : detail::ObserverBase {
  void on_event(std::size_t, SpinalEventKind k, double, double, double, double) {
    if (k == SpinalEventKind::division) ++count;
  }
  double count = 0.0;
};
}  // namespace

Estimate spinal_division_count(const ModelSpec& model, double x0, double t,
                               const NumericsSpec& numerics) {
  const std::size_t M = numerics.replicates;
  std::vector<double> counts(M);
  const bool needs_curve = !traits(model.r).identically_zero;
  // The division clock ignores the state, so Ytilde gives the same counts.
  const SpinalVariant v = needs_curve ? SpinalVariant::Ytilde() : SpinalVariant::Y();
  const std::vector<double> no_stops;
  for_each_replicate(M, numerics.workers, [&](std::size_t i) {
    std::vector<detail::Lane> lanes;
    lanes.emplace_back(model, v, x0, numerics.x_explode);
    detail::SpineDrivers drivers(StreamId{numerics.master_seed, "division-count", i});
    DivisionCounter obs;
    detail::run_spine(lanes, t, nullptr, numerics.dt, no_stops, drivers, obs);
    counts[i] = obs.count;
  });
  return estimate_mean(counts);
}

}  // namespace parasim
