#include "parasim/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "parasim/csv.hpp"
#include "parasim/parallel.hpp"
#include "parasim/quadrature.hpp"
#include "spine_stepper.hpp"

namespace parasim {

double rho(double x, const ModelSpec& model) {
  double v = eval(model.g, x) - model.b * x;
  if (!traits(model.lambda).identically_zero) v += dose_mean(model.doseI) * eval(model.lambda, x);
  if (!traits(model.r).identically_zero) v += dose_mean(model.doseP) * eval(model.r, x);
  return v;
}

namespace {

void require_positive(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw SpecError("exponent a must be positive");
  if (!(x > 0.0) || !std::isfinite(x)) throw SpecError("load x must be positive and finite");
}

double inner_Ia(double a, double u, double quad_tol) {
  return integrate([a, u](double v) { return std::pow(1.0 + u * v, -1.0 - a) * (1.0 - v); }, 0.0,
                   1.0, quad_tol);
}

/// E[(1 + J/x)^(1-a) - 1] over the normalized dose law.
double dose_expm1(double a, double x, const JumpSizeLaw& dose, double quad_tol) {
  const double q = 1.0 - a;
  auto h = [q, x](double z) { return std::expm1(q * std::log1p(z / x)); };
  if (dose.family == JumpFamily::point_mass) return h(dose.params[0]);
  const auto [lo, hi] = support(dose);
  return integrate([&](double z) { return h(z) * density(dose, z); }, lo, hi, quad_tol);
}

double dose_log(double x, const JumpSizeLaw& dose, double quad_tol) {
  auto h = [x](double z) { return std::log1p(z / x); };
  if (dose.family == JumpFamily::point_mass) return h(dose.params[0]);
  const auto [lo, hi] = support(dose);
  return integrate([&](double z) { return h(z) * density(dose, z); }, lo, hi, quad_tol);
}

bool p_active(const ModelSpec& m) { return !traits(m.p).identically_zero && m.pi.mass > 0.0; }

double fragmentation_term(double a, const ModelSpec& model) {
  const double q = 1.0 - a;
  return 2.0 * model.b * (1.0 - theta_moment(model.kappa, q)) / q;
}

void require_G_domain(double a, const FragmentationLaw& kappa) {
  if (!(a > 0.0) || a == 1.0 || !std::isfinite(a)) {
    throw SpecError("G_a needs a in (0,1) or an admissible a > 1");
  }
  if (a > 1.0 && !in_A(a, kappa)) {
    throw SpecError("G_a needs an admissible a: E[Theta^(1-a)] diverges");
  }
}

}  // namespace

double I_a(double a, double x, const JumpSizeLaw& pi, double quad_tol) {
  require_positive(a, x);
  if (pi.mass == 0.0) return 0.0;
  if (pi.family == JumpFamily::point_mass) {
    const double z = pi.params[0];
    return pi.mass * a * z * z / (x * x) * inner_Ia(a, z / x, quad_tol);
  }
  const auto [lo, hi] = support(pi);
  const double outer = integrate(
      [&](double z) { return z * z * inner_Ia(a, z / x, quad_tol) * density(pi, z); }, lo, hi,
      quad_tol);
  return pi.mass * a * outer / (x * x);
}

double dose_power_term(double a, double x, const JumpSizeLaw& dose, double quad_tol) {
  require_positive(a, x);
  if (a == 1.0) return dose_log(x, dose, quad_tol);
  return dose_expm1(a, x, dose, quad_tol) / (1.0 - a);
}

double D(double a, double x, const ModelSpec& model, double quad_tol) {
  require_positive(a, x);
  double v = eval(model.g, x) / x;
  if (!traits(model.sigma2).identically_zero) v -= a * eval(model.sigma2, x) / (x * x);
  if (p_active(model)) v -= eval(model.p, x) * I_a(a, x, model.pi, quad_tol);
  if (!traits(model.lambda).identically_zero) {
    v += eval(model.lambda, x) * dose_power_term(a, x, model.doseI, quad_tol);
  }
  return v;
}

double G_a(double a, double x, double r_arg, const ModelSpec& model, double quad_tol) {
  require_G_domain(a, model.kappa);
  require_positive(a, x);
  const double q = 1.0 - a;
  double bracket = eval(model.g, x) / x - a * eval(model.sigma2, x) / (x * x) -
                   fragmentation_term(a, model);
  if (p_active(model)) bracket -= eval(model.p, x) * I_a(a, x, model.pi, quad_tol);
  if (!traits(model.lambda).identically_zero) {
    bracket += eval(model.lambda, x) * dose_expm1(a, x, model.doseI, quad_tol) / q;
  }
  double value = (a - 1.0) * bracket;
  if (!traits(model.r).identically_zero) {
    value -= eval(model.r, r_arg) * dose_expm1(a, x, model.doseP, quad_tol);
  }
  return value;
}

bool in_A(double a, const FragmentationLaw& kappa) {
  if (!(a > 1.0)) throw SpecError("membership in the admissible set is defined for a > 1");
  return std::isfinite(theta_moment(kappa, 1.0 - a));
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw SpecError("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::sn_consistent: return "SN-consistent";
    case Verdict::ln_consistent: return "LN-consistent";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

void require_tail_grid(const std::vector<double>& grid) {
  if (grid.size() < 4) throw SpecError("tail check needs at least 4 grid points");
  if (!std::is_sorted(grid.begin(), grid.end())) throw SpecError("tail check grid must increase");
  if (grid.back() < 1e10) throw SpecError("tail check grid must reach 1e10");
}

void tail_regression(const std::vector<double>& xs, const std::vector<double>& ys, TailCheck& out) {
  const std::size_t n = xs.size();
  double mu = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += std::log(xs[i]);
    my += ys[i];
  }
  mu /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double suu = 0, suy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::log(xs[i]) - mu;
    suu += u * u;
    suy += u * (ys[i] - my);
  }
  out.slope = suy / suu;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = ys[i] - my - out.slope * (std::log(xs[i]) - mu);
    ss += res * res;
  }
  out.slope_se = n > 2 ? std::sqrt(ss / static_cast<double>(n - 2) / suu) : 0.0;
}

}  // namespace

TailCheck check_SN(const ModelSpec& model, double a, const std::vector<double>& grid,
                   double quad_tol, double slope_tol) {
  if (!(a > 0.0 && a < 1.0)) throw SpecError("the SN check needs a in (0,1)");
  require_tail_grid(grid);
  std::vector<double> xs, ys;
  for (std::size_t i = grid.size() / 2; i < grid.size(); ++i) {
    const double d = D(a, grid[i], model, quad_tol);
    if (!std::isfinite(d)) continue;
    xs.push_back(grid[i]);
    ys.push_back(d);
  }
  TailCheck out;
  if (xs.size() < 3) return out;
  tail_regression(xs, ys, out);
  if (out.slope - 2.0 * out.slope_se <= slope_tol) out.verdict = Verdict::sn_consistent;
  return out;
}

TailCheck check_LN(const ModelSpec& model, double a, double eta, const std::vector<double>& grid,
                   double quad_tol) {
  if (!in_A(a, model.kappa)) throw SpecError("the LN check needs an admissible a (finite E[Theta^(1-a)])");
  if (!(eta > 0.0)) throw SpecError("the LN check needs eta > 0");
  require_tail_grid(grid);
  std::vector<double> xs, ok;
  std::vector<double> ds;
  for (double x : grid) {
    if (!(x > std::exp(1.0))) continue;  // ln ln x must be positive
    const double lx = std::log(x);
    const double bound = lx * std::pow(std::log(lx), 1.0 + eta);
    const double d = D(a, x, model, quad_tol);
    xs.push_back(x);
    ds.push_back(d);
    ok.push_back(d >= bound ? 1.0 : 0.0);
  }
  TailCheck out;
  std::size_t run = 0;
  for (std::size_t i = ok.size(); i-- > 0;) {
    if (ok[i] == 0.0) break;
    ++run;
  }
  out.run = run;
  if (run > 0) out.x0 = xs[xs.size() - run];
  // Diagnostic tail slope over the upper half.
  std::vector<double> ux(xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2), xs.end());
  std::vector<double> uy(ds.begin() + static_cast<std::ptrdiff_t>(ds.size() / 2), ds.end());
  if (ux.size() >= 3) tail_regression(ux, uy, out);
  if (run >= 3 && 2 * run >= xs.size()) out.verdict = Verdict::ln_consistent;
  return out;
}

CriteriaReport criteria_report(const ModelSpec& model, double a, double eta,
                               const std::vector<double>& grid, double r_arg, double quad_tol,
                               bool scan) {
  if (a == 1.0) throw SpecError("criteria report needs a != 1");
  CriteriaReport rep;
  rep.grid = grid;
  rep.a = a;
  rep.eta = eta;
  rep.r_arg = r_arg;
  rep.quad_tol = quad_tol;
  if (a > 1.0) rep.in_A = in_A(a, model.kappa);
  for (double x : grid) {
    rep.rho.push_back(rho(x, model));
    rep.D.push_back(D(a, x, model, quad_tol));
    rep.G.push_back(G_a(a, x, r_arg, model, quad_tol));
  }
  rep.check = a < 1.0 ? check_SN(model, a, grid, quad_tol) : check_LN(model, a, eta, grid, quad_tol);
  if (scan) {
    for (double s : {0.25, 0.5, 0.75, 1.5, 2.0, 3.0}) {
      if (s > 1.0 && !in_A(s, model.kappa)) continue;
      const TailCheck c = s < 1.0 ? check_SN(model, s, grid, quad_tol) : check_LN(model, s, eta, grid, quad_tol);
      rep.scan.emplace_back(s, c.verdict);
    }
  }
  return rep;
}

nlohmann::json to_json(const CriteriaReport& rep) {
  nlohmann::json j;
  j["marker"] = rep.check.marker;
  j["a"] = rep.a;
  j["eta"] = rep.eta;
  j["r_arg"] = rep.r_arg;
  j["quad_tol"] = rep.quad_tol;
  j["in_A"] = rep.in_A ? nlohmann::json(*rep.in_A) : nlohmann::json(nullptr);
  j["verdict"] = std::string(to_string(rep.check.verdict));
  nlohmann::json diag;
  diag["tail_slope"] = rep.check.slope;
  diag["tail_slope_se"] = rep.check.slope_se;
  diag["x0"] = rep.check.x0 ? nlohmann::json(*rep.check.x0) : nlohmann::json(nullptr);
  diag["terminal_run"] = rep.check.run;
  j["diagnostics"] = diag;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    rows.push_back({{"x", rep.grid[i]}, {"rho", rep.rho[i]}, {"D", rep.D[i]}, {"G", rep.G[i]}});
  }
  j["grid"] = rows;
  nlohmann::json scan = nlohmann::json::array();
  for (const auto& [s, v] : rep.scan) scan.push_back({{"a", s}, {"verdict", std::string(to_string(v))}});
  j["scan"] = scan;
  return j;
}

void write_criteria_csv(std::ostream& out, const CriteriaReport& rep) {
  CsvWriter csv(out);
  csv.row("x", "rho", "D", "G");
  for (std::size_t i = 0; i < rep.grid.size(); ++i) csv.row(rep.grid[i], rep.rho[i], rep.D[i], rep.G[i]);
}

// ---------------------------------------------------------------------------

GaEvaluator::GaEvaluator(const ModelSpec& model, double a, double lo, double hi, double quad_tol,
                         std::size_t nodes)
    : model_(&model), a_(a), quad_tol_(quad_tol) {
  require_G_domain(a, model.kappa);
  if (!(lo > 0) || !(hi > lo)) throw SpecError("G_a table needs 0 < lo < hi");
  log_lo_ = std::log(lo);
  log_hi_ = std::log(hi);
  step_ = (log_hi_ - log_lo_) / static_cast<double>(nodes - 1);
  frag_ = fragmentation_term(a, model);
  p_on_ = p_active(model);
  lambda_on_ = !traits(model.lambda).identically_zero;
  r_on_ = !traits(model.r).identically_zero;
  auto build = [&](int which) {
    std::vector<double> t(nodes);
    for (std::size_t i = 0; i < nodes; ++i) t[i] = direct(std::exp(log_lo_ + step_ * static_cast<double>(i)), which);
    return t;
  };
  if (p_on_) I_table_ = build(0);
  if (lambda_on_ && model.doseI.family != JumpFamily::point_mass) J_table_ = build(1);
  if (r_on_ && model.doseP.family != JumpFamily::point_mass) K_table_ = build(2);
}

double GaEvaluator::direct(double x, int which) const {
  switch (which) {
    case 0: return I_a(a_, x, model_->pi, quad_tol_);
    case 1: return dose_expm1(a_, x, model_->doseI, quad_tol_);
    default: return dose_expm1(a_, x, model_->doseP, quad_tol_);
  }
}

double GaEvaluator::part(const std::vector<double>& table, double x, int which) const {
  const double u = (std::log(x) - log_lo_) / step_;
  if (table.empty() || u < 0.0 || u > static_cast<double>(table.size() - 1)) return direct(x, which);
  const std::size_t i = std::min(static_cast<std::size_t>(u), table.size() - 2);
  const double w = u - static_cast<double>(i);
  return table[i] + w * (table[i + 1] - table[i]);
}

double GaEvaluator::operator()(double x, double r_arg) const {
  const ModelSpec& m = *model_;
  double bracket = eval(m.g, x) / x - a_ * eval(m.sigma2, x) / (x * x) - frag_;
  if (p_on_) bracket -= eval(m.p, x) * part(I_table_, x, 0);
  if (lambda_on_) bracket += eval(m.lambda, x) * part(J_table_, x, 1) / (1.0 - a_);
  double value = (a_ - 1.0) * bracket;
  if (r_on_) value -= eval(m.r, r_arg) * part(K_table_, x, 2);
  return value;
}

namespace {

struct ZaObserver : detail::ObserverBase {
  ZaObserver(const GaEvaluator& G, const MeanFieldCurve* mf, double a, double c, double b,
             const detail::Lane* lane, double* row)
      : G_(G), mf_(mf), q_(1.0 - a), c_(c), b_(b), lane_(lane), row_(row) {}

  void on_flow(std::size_t, double t0, double x0, double t1, double x1) {
    if (stopped) return;
    const double r_arg = mf_ ? mf_->at(t0) : 0.0;
    const double g0 = G_(x0, r_arg);
    const double g1 = (std::isfinite(x1) && x1 > 0.0) ? G_(x1, r_arg) : g0;
    integral += 0.5 * (g0 + g1) * (t1 - t0);
    check(x1);
  }
  void on_event(std::size_t, SpinalEventKind, double, double, double, double after) {
    if (!stopped) check(after);
  }
  void on_stop(std::size_t k, double) {
    row_[k] = stopped ? frozen : std::pow(lane_->x, q_) * std::exp(integral);
  }
  bool finished() const { return stopped; }

  void check(double x) {
    if (x <= c_ || x >= b_) {
      stopped = true;
      frozen = std::pow(x, q_) * std::exp(integral);
    }
  }

  const GaEvaluator& G_;
  const MeanFieldCurve* mf_;
  double q_, c_, b_;
  const detail::Lane* lane_;
  double* row_;
  double integral = 0.0;
  bool stopped = false;
  double frozen = 0.0;
};

}  // namespace

MartingaleCheckResult martingale_Za_check(double a, double c, double b_high,
                                          const std::vector<double>& t_grid, const ModelSpec& model,
                                          double x0, const MeanFieldCurve* mf,
                                          const NumericsSpec& numerics, double quad_tol) {
  if (!(0.0 < c && c < x0 && x0 < b_high)) throw SpecError("corridor (c, b) must satisfy 0 < c < x0 < b");
  if (t_grid.empty()) throw SpecError("martingale check needs at least one time");
  std::vector<double> times = t_grid;
  std::sort(times.begin(), times.end());
  if (times.front() < 0.0) throw SpecError("martingale times must be non-negative");
  if (!traits(model.r).identically_zero && !mf) {
    throw SpecError("martingale check with a non-zero lysis rate needs a mean-field curve");
  }
  const GaEvaluator G(model, a, c, b_high, quad_tol);

  const std::size_t M = numerics.replicates, K = times.size();
  std::vector<double> values(M * K);
  std::vector<char> exited(M, 0);
  for_each_replicate(M, numerics.workers, [&](std::size_t i) {
    std::vector<detail::Lane> lanes;
    lanes.emplace_back(model, SpinalVariant::Y(), x0, numerics.x_explode);
    detail::SpineDrivers drivers(StreamId{numerics.master_seed, "martingale", i});
    ZaObserver obs(G, mf, a, c, b_high, &lanes[0], &values[i * K]);
    detail::run_spine(lanes, times.back(), mf, numerics.dt, times, drivers, obs);
    exited[i] = obs.stopped;
  });

  MartingaleCheckResult out;
  out.a = a;
  out.c = c;
  out.b_high = b_high;
  out.target = std::pow(x0, 1.0 - a);
  out.times = times;
  std::vector<double> col(M);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < M; ++i) col[i] = values[i * K + k];
    const Estimate e = estimate_mean(col);
    out.estimates.push_back(e);
    const double z = z_score(e, out.target, 1e-9);
    out.z.push_back(z);
    out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
  }
  out.exited = static_cast<std::size_t>(std::count(exited.begin(), exited.end(), 1));
  return out;
}

namespace {
struct ExplosionObserver : detail::ObserverBase {
  explicit ExplosionObserver(const detail::Lane* lane) : lane_(lane) {}
  bool finished() const { return lane_->exploded; }
  const detail::Lane* lane_;
};
}  // namespace

Estimate explosion_probability(const ModelSpec& model, double x0, double T, const MeanFieldCurve* mf,
                               const NumericsSpec& numerics) {
  check_numerics(numerics);
  MeanFieldCurve solved;
  if (!traits(model.r).identically_zero && !mf && T > 0.0) {
    solved = solve_mean_field(model, x0, T, uniform_grid(T, 50), numerics);
    mf = &solved;
  }
  const std::size_t M = numerics.replicates;
  std::vector<double> hit(M, 0.0);
  const std::vector<double> no_stops;
  for_each_replicate(M, numerics.workers, [&](std::size_t i) {
    std::vector<detail::Lane> lanes;
    lanes.emplace_back(model, SpinalVariant::Y(), x0, numerics.x_explode);
    detail::SpineDrivers drivers(StreamId{numerics.master_seed, "explosion", i});
    ExplosionObserver obs(&lanes[0]);
    if (T > 0.0) detail::run_spine(lanes, T, mf, numerics.dt, no_stops, drivers, obs);
    hit[i] = lanes[0].exploded ? 1.0 : 0.0;
  });
  return estimate_mean(hit);
}

LSchedule l_schedule(double b_frak, double delta, double eta, double tol) {
  if (!(eta > 0.0)) throw SpecError("l-schedule diverges for eta <= 0");
  if (!(b_frak > std::exp(1.0))) throw SpecError("l-schedule needs b > e so that ln ln b > 0");
  if (!(delta > 0.0)) throw SpecError("l-schedule needs delta > 0");
  if (!(tol > 0.0)) throw SpecError("l-schedule needs tol > 0");
  const double c = std::log1p(delta);
  const double L = std::log(std::log(b_frak));
  auto base = [&](double n) { return (n - 1.0) * c + L; };
  auto tail = [&](double n) { return std::pow(base(n), -eta) / (c * eta); };  // int_n^inf
  constexpr std::size_t kMaxTerms = 2'000'000'000;
  LSchedule out;
  double sum = 0.0, comp = 0.0;  // Kahan
  for (std::size_t n = 1; n <= kMaxTerms; ++n) {
    const double term = std::pow(base(static_cast<double>(n)), -(1.0 + eta));
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    const double hi = tail(static_cast<double>(n));
    const double lo = tail(static_cast<double>(n + 1));
    if (hi - lo < tol) {
      out.terms = n;
      out.lower = sum + lo;
      out.upper = sum + hi;
      out.value = 0.5 * (out.lower + out.upper);
      return out;
    }
  }
  throw std::runtime_error("l-schedule did not reach the requested tolerance");
}

}  // namespace parasim
