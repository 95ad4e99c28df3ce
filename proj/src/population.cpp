#include "parasim/population.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "parasim/csv.hpp"
#include "parasim/parallel.hpp"

namespace parasim {

std::string_view to_string(PopEventKind k) {
  switch (k) {
    case PopEventKind::division: return "division";
    case PopEventKind::death: return "death";
    case PopEventKind::reservoir_dose: return "reservoir-dose";
    case PopEventKind::lysis_dose: return "lysis-dose";
  }
  return "?";
}

namespace {

constexpr int kMaxSplitDepth = 8;
constexpr double kEventBudget = 0.1;

enum class Fate { alive, dead, divided };

// Events in priority order.
enum EventSlot { kDeath = 0, kDivision = 1, kReservoir = 2, kLysis = 3 };

class PopulationStepper {
 public:
  PopulationStepper(const ModelSpec& model, const MeanFieldCurve* mf, const NumericsSpec& numerics,
                    DriverStream& s, Population& pop, bool record)
      : model_(model), kernel_(model, numerics.x_explode), mf_(mf), dt_(numerics.dt), s_(s),
        pop_(pop), record_(record) {
    lambda_zero_ = traits(model.lambda).identically_zero;
    r_zero_ = traits(model.r).identically_zero;
  }

  /// Advances `cell` over [t, t_end]; daughters born inside the interval are
  /// appended to `pending` together with their birth time.
  Fate advance(Cell& cell, double t, double t_end, int depth,
               std::vector<std::pair<Cell, double>>& pending) {
    while (t < t_end) {
      const bool live = !cell.exploded;
      std::array<double, 4> rate{model_.d, model_.b, 0.0, 0.0};
      if (live) {
        if (!lambda_zero_) rate[kReservoir] = eval(model_.lambda, cell.x);
        if (!r_zero_) rate[kLysis] = eval(model_.r, mf_ ? mf_->at(t) : 0.0);
      }
      const double total = rate[0] + rate[1] + rate[2] + rate[3];
      double hs = t_end - t;
      if (live && !kernel_.null_dynamics()) hs = std::min(hs, kernel_.adaptive_step(cell.x, dt_));
      if (total * hs >= kEventBudget) hs = kEventBudget / total * 0.999;
      if (t_end - (t + hs) < 1e-12 * std::max(1.0, t_end)) hs = t_end - t;

      std::array<double, 4> prob;
      double none = 1.0;
      for (int e = 0; e < 4; ++e) {
        prob[e] = rate[e] * hs;
        none *= 1.0 - prob[e];
      }
      if (total == 0.0 || s_.uniform() < none) {
        flow(cell, hs);
        t = (hs == t_end - t) ? t_end : t + hs;
        continue;
      }
      // Independent Bernoulli events conditioned on at least one firing.
      std::array<bool, 4> fired{};
      int count = 0;
      do {
        count = 0;
        for (int e = 0; e < 4; ++e) {
          fired[e] = prob[e] > 0 && s_.uniform() < prob[e];
          count += fired[e];
        }
      } while (count == 0);

      if (count >= 2 && depth < kMaxSplitDepth) {
        const double mid = t + 0.5 * hs;
        Fate f = advance(cell, t, mid, depth + 1, pending);
        if (f != Fate::alive) return f;
        const double end = (hs == t_end - t) ? t_end : t + hs;
        f = advance(cell, mid, end, depth + 1, pending);
        if (f != Fate::alive) return f;
        t = end;
        continue;
      }

      flow(cell, hs);
      t = (hs == t_end - t) ? t_end : t + hs;
      if (fired[kDeath]) {
        log(PopEventKind::death, t, cell.label, cell.x);
        return Fate::dead;
      }
      if (fired[kDivision]) {
        const double theta = sample_theta(model_.kappa, s_);
        Cell left = cell, right = cell;
        left.label.push_back('0');
        right.label.push_back('1');
        if (cell.exploded) {
          left.x = right.x = kInfinity;
        } else {
          left.x = theta * cell.x;
          right.x = cell.x - left.x;
        }
        log(PopEventKind::division, t, cell.label, theta);
        pending.emplace_back(std::move(left), t);
        pending.emplace_back(std::move(right), t);
        return Fate::divided;
      }
      if (fired[kReservoir]) {
        const double dose = sample(model_.doseI, s_);
        add(cell, dose);
        log(PopEventKind::reservoir_dose, t, cell.label, dose);
      } else if (fired[kLysis]) {
        const double dose = sample(model_.doseP, s_);
        add(cell, dose);
        log(PopEventKind::lysis_dose, t, cell.label, dose);
      }
    }
    return Fate::alive;
  }

 private:
  void flow(Cell& cell, double h) {
    if (cell.exploded || kernel_.null_dynamics()) return;
    cell.x = kernel_.step(cell.x, h, s_, &pop_.diagnostics);
    if (std::isinf(cell.x)) cell.exploded = true;
    cell.sup = std::max(cell.sup, cell.x);
  }

  void add(Cell& cell, double amount) {
    cell.x += amount;
    if (cell.x >= kernel_.x_explode()) {
      cell.x = kInfinity;
      cell.exploded = true;
    }
    cell.sup = std::max(cell.sup, cell.x);
  }

  void log(PopEventKind k, double t, const std::string& label, double magnitude) {
    if (record_) pop_.log.push_back({k, t, label, magnitude});
  }

  const ModelSpec& model_;
  FlowKernel kernel_;
  const MeanFieldCurve* mf_;
  double dt_;
  DriverStream& s_;
  Population& pop_;
  bool record_;
  bool lambda_zero_ = true;
  bool r_zero_ = true;
};

}  // namespace

Population simulate_population(const ModelSpec& model, double x0, double T,
                               const MeanFieldCurve* mf, const NumericsSpec& numerics,
                               const StreamId& id, const PopulationOptions& options) {
  check_numerics(numerics);
  if (!traits(model.r).identically_zero && !mf) {
    throw SpecError("population with a non-zero lysis rate needs a mean-field curve");
  }
  DriverStream s(id);
  Population pop;
  Cell root;
  root.x = x0 >= numerics.x_explode ? kInfinity : x0;
  root.exploded = std::isinf(root.x);
  root.sup = root.x;
  pop.living.push_back(root);

  std::vector<double> stops = options.snapshot_times;
  std::sort(stops.begin(), stops.end());
  std::size_t next_stop = 0;
  auto emit = [&](double t) {
    while (next_stop < stops.size() && stops[next_stop] <= t + 1e-12) {
      if (options.on_snapshot) options.on_snapshot(next_stop, stops[next_stop], pop.living);
      if (options.keep_snapshots) pop.snapshots.push_back({stops[next_stop], pop.living});
      ++next_stop;
    }
  };

  PopulationStepper stepper(model, mf, numerics, s, pop, options.record_events);
  double t = 0.0;
  emit(0.0);
  std::vector<Cell> next;
  std::vector<std::pair<Cell, double>> pending;
  while (t < T && !pop.living.empty()) {
    double t_next = std::min(T, t + numerics.dt);
    if (next_stop < stops.size() && stops[next_stop] < t_next) t_next = stops[next_stop];
    if (T - t_next < 1e-12 * std::max(1.0, T)) t_next = T;
    next.clear();
    next.reserve(pop.living.size() + 8);
    for (auto& cell : pop.living) {
      pending.clear();
      if (stepper.advance(cell, t, t_next, 0, pending) == Fate::alive) next.push_back(std::move(cell));
      // Daughters continue from their birth time; theirs may divide again.
      for (std::size_t k = 0; k < pending.size(); ++k) {
        Cell child = std::move(pending[k].first);
        const double born = pending[k].second;
        if (stepper.advance(child, born, t_next, 0, pending) == Fate::alive) next.push_back(std::move(child));
      }
    }
    pop.living.swap(next);
    t = t_next;
    pop.time = t;
    if (pop.living.size() > numerics.max_cells) {
      pop.cap_hit = true;
      break;
    }
    emit(t);
  }
  pop.extinct = pop.living.empty();
  if (!pop.cap_hit) {
    pop.time = std::max(pop.time, t);
    // Extinct populations stay empty for the remaining snapshot times.
    if (pop.extinct) emit(T);
    pop.time = pop.extinct ? pop.time : T;
  }
  return pop;
}

void write_snapshot_csv(std::ostream& out, const std::vector<PopulationSnapshot>& snapshots) {
  CsvWriter csv(out);
  csv.row("time", "label", "load", "exploded");
  for (const auto& snap : snapshots) {
    for (const auto& c : snap.cells) csv.row(snap.time, c.label, c.x, c.exploded);
  }
}

void write_event_log_csv(std::ostream& out, const std::vector<PopEvent>& log) {
  CsvWriter csv(out);
  csv.row("time", "kind", "label", "magnitude");
  for (const auto& e : log) csv.row(e.time, to_string(e.kind), e.label, e.magnitude);
}

// ---------------------------------------------------------------------------

BirthDeathLaw birth_death_law(double b, double d, double t) {
  if (!(b > 0) || !(d >= 0) || !(t >= 0) || !std::isfinite(b) || !std::isfinite(d)) {
    throw SpecError("birth-death law needs b > 0, d >= 0, t >= 0");
  }
  if (b == d) throw SpecError("birth-death law is degenerate for b = d");
  const double E = std::expm1((b - d) * t);
  const double denom = b * E + b - d;
  return {d * E / denom, b * E / denom};
}

double birth_death_pmf(double b, double d, double t, std::uint64_t n) {
  const auto [alpha, beta] = birth_death_law(b, d, t);
  if (n == 0) return alpha;
  if (n == 1) return (1.0 - alpha) * (1.0 - beta);
  return (1.0 - alpha) * (1.0 - beta) * std::pow(beta, static_cast<double>(n - 1));
}

std::uint64_t sample_N(double b, double d, double t, DriverStream& s) {
  const auto [alpha, beta] = birth_death_law(b, d, t);
  if (s.uniform() < alpha) return 0;
  if (beta <= 0.0) return 1;
  const double g = std::floor(std::log(s.uniform()) / std::log(beta));
  return 1 + static_cast<std::uint64_t>(g);
}

// ---------------------------------------------------------------------------

std::vector<ManyToOneResult> many_to_one_check(const std::vector<Functional>& Fs, double t,
                                               const ModelSpec& model, const MeanFieldCurve* mf,
                                               const NumericsSpec& pop, const NumericsSpec& spine) {
  for (const auto& F : Fs) {
    if (!F.bounded() && !has_linear_growth(model)) {
      throw SpecError("identity functional requires a preset without explosion (linear growth)");
    }
  }
  const std::size_t M = pop.replicates, nF = Fs.size();
  std::vector<double> sums(M * nF);
  std::vector<char> capped(M, 0);
  const double scale = std::exp(-(model.b - model.d) * t);
  for_each_replicate(M, pop.workers, [&](std::size_t i) {
    PopulationOptions opts;
    opts.keep_snapshots = false;
    const Population p = simulate_population(model, model.x0, t, mf, pop,
                                             StreamId{pop.master_seed, "m2o-population", i}, opts);
    for (std::size_t f = 0; f < nF; ++f) {
      double sum = 0.0;
      for (const auto& c : p.living) sum += Fs[f](c.x, c.sup);
      sums[f * M + i] = scale * sum;
    }
    capped[i] = p.cap_hit;
  });
  const auto n_capped = static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1));
  std::vector<ManyToOneResult> out(nF);
  for (std::size_t f = 0; f < nF; ++f) {
    out[f].lhs = estimate_mean(std::span<const double>(sums).subspan(f * M, M));
    out[f].rhs = spinal_expectation(Fs[f], SpinalVariant::Y(), t, model, mf, spine, "m2o-spine");
    out[f].z = z_score(out[f].lhs, out[f].rhs);
    out[f].capped = n_capped;
  }
  return out;
}

ManyToOneResult many_to_one_check(const Functional& F, double t, const ModelSpec& model,
                                  const MeanFieldCurve* mf, const NumericsSpec& pop,
                                  const NumericsSpec& spine) {
  return many_to_one_check(std::vector<Functional>{F}, t, model, mf, pop, spine).front();
}

namespace {
Estimate column(const std::vector<double>& raw, std::size_t stride, std::size_t offset, std::size_t M) {
  std::vector<double> v(M);
  for (std::size_t i = 0; i < M; ++i) v[i] = raw[i * stride + offset];
  return estimate_mean(v);
}
}  // namespace

Estimate SurvivalStats::at_least(std::size_t j, std::size_t k) const {
  return column(at_least_raw, times.size() * thresholds.size(), j * thresholds.size() + k, replicates);
}
Estimate SurvivalStats::sup_within(std::size_t j, std::size_t k) const {
  return column(sup_within_raw, times.size() * thresholds.size(), j * thresholds.size() + k, replicates);
}
Estimate SurvivalStats::finite(std::size_t j) const {
  return column(finite_raw, times.size(), j, replicates);
}
Estimate SurvivalStats::alive(std::size_t j) const {
  return column(alive_raw, times.size(), j, replicates);
}
Estimate SurvivalStats::count(std::size_t j) const {
  return column(count_raw, times.size(), j, replicates);
}

std::vector<std::vector<double>> SurvivalStats::at_least_rows_over_time(std::size_t k) const {
  const std::size_t T = times.size(), K = thresholds.size();
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(T));
  for (std::size_t i = 0; i < replicates; ++i)
    for (std::size_t j = 0; j < T; ++j) rows[i][j] = at_least_raw[(i * T + j) * K + k];
  return rows;
}

std::vector<std::vector<double>> SurvivalStats::at_least_rows_over_threshold(std::size_t j) const {
  const std::size_t T = times.size(), K = thresholds.size();
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(K));
  for (std::size_t i = 0; i < replicates; ++i)
    for (std::size_t k = 0; k < K; ++k) rows[i][k] = at_least_raw[(i * T + j) * K + k];
  return rows;
}

std::vector<std::vector<double>> SurvivalStats::sup_within_rows_over_time(std::size_t k) const {
  const std::size_t T = times.size(), K = thresholds.size();
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(T));
  for (std::size_t i = 0; i < replicates; ++i)
    for (std::size_t j = 0; j < T; ++j) rows[i][j] = sup_within_raw[(i * T + j) * K + k];
  return rows;
}

std::vector<std::vector<double>> SurvivalStats::finite_rows_over_time() const {
  const std::size_t T = times.size();
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(T));
  for (std::size_t i = 0; i < replicates; ++i)
    for (std::size_t j = 0; j < T; ++j) rows[i][j] = finite_raw[i * T + j];
  return rows;
}

SurvivalStats survival_fraction_stats(const ModelSpec& model, double x0, const MeanFieldCurve* mf,
                                      std::vector<double> times, std::vector<double> thresholds,
                                      const NumericsSpec& numerics, std::string_view purpose) {
  if (times.empty()) throw SpecError("survival statistics need at least one time");
  std::sort(times.begin(), times.end());
  SurvivalStats st;
  st.times = times;
  st.thresholds = thresholds;
  const std::size_t M = numerics.replicates, T = times.size(), K = thresholds.size();
  st.replicates = M;
  st.at_least_raw.assign(M * T * K, 0.0);
  st.sup_within_raw.assign(M * T * K, 0.0);
  st.finite_raw.assign(M * T, 0.0);
  st.alive_raw.assign(M * T, 0.0);
  st.count_raw.assign(M * T, 0.0);
  std::vector<char> capped(M, 0);

  for_each_replicate(M, numerics.workers, [&](std::size_t i) {
    PopulationOptions opts;
    opts.keep_snapshots = false;
    opts.snapshot_times = times;
    opts.on_snapshot = [&](std::size_t j, double, const std::vector<Cell>& cells) {
      const double N = static_cast<double>(cells.size());
      st.count_raw[i * T + j] = N;
      if (cells.empty()) return;
      st.alive_raw[i * T + j] = 1.0;
      double finite = 0.0;
      for (const auto& c : cells) finite += c.exploded ? 0.0 : 1.0;
      st.finite_raw[i * T + j] = finite / N;
      for (std::size_t k = 0; k < K; ++k) {
        double ge = 0.0, within = 0.0;
        for (const auto& c : cells) {
          ge += c.x >= thresholds[k] ? 1.0 : 0.0;
          within += c.sup <= thresholds[k] ? 1.0 : 0.0;
        }
        st.at_least_raw[(i * T + j) * K + k] = ge / N;
        st.sup_within_raw[(i * T + j) * K + k] = within / N;
      }
    };
    const Population p = simulate_population(model, x0, times.back(), mf, numerics,
                                             StreamId{numerics.master_seed, std::string(purpose), i}, opts);
    capped[i] = p.cap_hit;
  });
  st.capped = static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1));
  return st;
}

std::vector<double> population_count_pmf(const ModelSpec& model, double T, const MeanFieldCurve* mf,
                                         const NumericsSpec& numerics, std::size_t* capped) {
  const std::size_t M = numerics.replicates;
  std::vector<std::size_t> counts(M);
  std::vector<char> cap(M, 0);
  for_each_replicate(M, numerics.workers, [&](std::size_t i) {
    PopulationOptions opts;
    opts.keep_snapshots = false;
    const Population p = simulate_population(model, model.x0, T, mf, numerics,
                                             StreamId{numerics.master_seed, "count-pmf", i}, opts);
    counts[i] = p.N();
    cap[i] = p.cap_hit;
  });
  std::size_t top = 0;
  for (auto c : counts) top = std::max(top, c);
  std::vector<double> pmf(top + 1, 0.0);
  for (auto c : counts) pmf[c] += 1.0 / static_cast<double>(M);
  if (capped) *capped = static_cast<std::size_t>(std::count(cap.begin(), cap.end(), 1));
  return pmf;
}

}  // namespace parasim
