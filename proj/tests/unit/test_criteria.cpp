#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "parasim/criteria.hpp"
#include "parasim/presets.hpp"
#include "parasim/rng.hpp"

using namespace parasim;
using namespace parasim::testing;

namespace {

// closed form of a x^-2 z^2 int_0^1 (1 + z v / x)^(-1-a) (1 - v) dv for a point mass z
double Ia_point_closed(double a, double z, double x) {
  const double u = z / x;
  return (1.0 + (1.0 - a) * u - std::pow(1.0 + u, 1.0 - a)) / (1.0 - a);
}

// Monte Carlo over v ~ U(0,1) of the same integral
Estimate Ia_point_mc(double a, double z, double x, std::size_t n, std::uint64_t seed) {
  DriverStream s(seed, "ia-oracle", 0);
  std::vector<double> v(n);
  for (auto& y : v) {
    const double w = s.uniform();
    y = a * z * z / (x * x) * std::pow(1.0 + z * w / x, -1.0 - a) * (1.0 - w);
  }
  return estimate_mean(v);
}

double beta_moment(double beta, double q) {
  return std::exp(std::lgamma(beta + q) + std::lgamma(2 * beta) - std::lgamma(2 * beta + q) - std::lgamma(beta));
}

ModelSpec null_model(FragmentationLaw kappa) {
  ModelSpec m;
  m.kappa = kappa;
  return m;
}

NumericsSpec small(std::size_t M, double dt = 1e-2) {
  NumericsSpec n;
  n.replicates = M;
  n.dt = dt;
  return n;
}

}  // namespace

TEST_CASE("rho examples") {
  ModelSpec m;
  m.g = g_linear(2.0);
  m.lambda = lambda_const(1.0);
  m.doseI = make_jump_law(JumpFamily::exponential, {0.5}, JumpRole::reservoir_dose_I);
  m.b = 1.0;
  for (double x : {0.0, 0.3, 4.0, 1e6}) CHECK(rho(x, m) == doctest::Approx(x + 0.5).epsilon(1e-14));

  const auto full = presets::subcritical();
  CHECK(rho(0.0, full) == 0.0);

  const auto neg = presets::rho_negative();
  for (double x : {0.0, 0.01, 1.0, 100.0}) {
    CHECK(rho(x, neg) == doctest::Approx(-2 * x));
    CHECK(rho(x, neg) <= -std::min(2.0 * x, 0.5));
  }
}

TEST_CASE("rho is linear in the dose means") {
  auto m = presets::full_with_death();
  auto m2 = m;
  m2.doseI = make_jump_law(JumpFamily::exponential, {1.0}, JumpRole::reservoir_dose_I);
  for (double x : {0.5, 3.0}) {
    const double base = eval(m.g, x) + 0.5 * eval(m.r, x) - m.b * x;
    CHECK(rho(x, m2) - base == doctest::Approx(2.0 * (rho(x, m) - base)).epsilon(1e-14));
  }
}

TEST_CASE("I_a: small-jump limit") {
  const auto pi = make_jump_law(JumpFamily::point_mass, {1.0}, JumpRole::parasite_jump_pi);
  CHECK(rel_err(I_a(2.0, 1e3, pi, 1e-10), 1e-6) < 0.01);
}

TEST_CASE("I_a: worked value against closed form and Monte Carlo") {
  const auto pi = make_jump_law(JumpFamily::point_mass, {1.0}, JumpRole::parasite_jump_pi);
  const double q = I_a(2.0, 10.0, pi, 1e-12);
  const double closed = Ia_point_closed(2.0, 1.0, 10.0);
  CHECK(closed == doctest::Approx(1.0 / 110.0).epsilon(1e-12));
  CHECK(std::abs(q - closed) < 1e-12);
  const auto mc = Ia_point_mc(2.0, 1.0, 10.0, 1'000'000, 1);
  CHECK(std::abs(q - mc.mean) < 4 * mc.se);
}

TEST_CASE("I_a: empty measure gives 0; positive otherwise; x^-2 decay") {
  const auto empty = make_jump_law(JumpFamily::exponential, {0.5}, JumpRole::parasite_jump_pi, 0.0);
  CHECK(I_a(1.5, 2.0, empty, 1e-10) == 0.0);
  const auto ex = make_jump_law(JumpFamily::exponential, {0.5}, JumpRole::parasite_jump_pi, 2.0);
  for (double a : {0.5, 1.5, 3.0}) {
    for (double x : {0.1, 1.0, 100.0}) CHECK(I_a(a, x, ex, 1e-10) > 0.0);
  }
  const auto pm = make_jump_law(JumpFamily::point_mass, {1.0}, JumpRole::parasite_jump_pi);
  const auto grid = log_grid(1e3, 1e6, 7);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double slope = std::log(I_a(2.0, grid[k], pm, 1e-12) / I_a(2.0, grid[k - 1], pm, 1e-12)) /
                         std::log(grid[k] / grid[k - 1]);
    CHECK(std::abs(slope + 2.0) < 0.05 * 2.0);
  }
  CHECK_THROWS_AS(I_a(0.0, 1.0, pm, 1e-10), SpecError);
  CHECK_THROWS_AS(I_a(1.5, 0.0, pm, 1e-10), SpecError);
}

TEST_CASE("I_a: continuous laws against Monte Carlo over (z, v)") {
  const std::vector<JumpSizeLaw> laws = {
      make_jump_law(JumpFamily::exponential, {0.5}, JumpRole::parasite_jump_pi, 1.5),
      make_jump_law(JumpFamily::uniform_interval, {0.2, 3.0}, JumpRole::parasite_jump_pi, 1.0),
      make_jump_law(JumpFamily::truncated_pareto, {1.5, 0.5, 20.0}, JumpRole::parasite_jump_pi, 0.7),
  };
  std::uint64_t rep = 0;
  for (const auto& law : laws) {
    for (auto [a, x] : {std::pair{0.5, 2.0}, std::pair{2.0, 5.0}}) {
      DriverStream s(2, "ia-mc", rep++);
      std::vector<double> v(400'000);
      for (auto& y : v) {
        const double z = sample(law, s), w = s.uniform();
        y = law.mass * a * z * z / (x * x) * std::pow(1.0 + z * w / x, -1.0 - a) * (1.0 - w);
      }
      const auto mc = estimate_mean(v);
      CHECK(std::abs(I_a(a, x, law, 1e-10) - mc.mean) < 4 * mc.se);
    }
  }
}

TEST_CASE("D: only growth and diffusion survive without jumps or reservoir") {
  ModelSpec m;
  m.g = fn(FunctionFamily::logistic, {1.0, 50.0}, FunctionRole::growth_g);
  m.sigma2 = fn(FunctionFamily::power, {0.3, 2.0}, FunctionRole::diffusion_sigma2);
  for (double a : {0.5, 2.0}) {
    for (double x : {0.5, 10.0, 1e4}) {
      CHECK(D(a, x, m, 1e-10) == doctest::Approx(eval(m.g, x) / x - a * eval(m.sigma2, x) / (x * x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("D: point-mass reservoir term against its Taylor expansion") {
  ModelSpec m;
  m.lambda = fn(FunctionFamily::linear, {0.5}, FunctionRole::reservoir_rate_lambda);
  m.doseI = make_jump_law(JumpFamily::point_mass, {3.0}, JumpRole::reservoir_dose_I);
  const double x = 1e6, iota = 3.0;
  for (double a : {0.5, 2.0}) {
    const double u = iota / x;
    const double taylor = eval(m.lambda, x) * (u - a * u * u / 2.0);
    CHECK(rel_err(D(a, x, m, 1e-10), taylor) < 0.01);
    CHECK(rel_err(D(a, x, m, 1e-10), eval(m.lambda, x) * iota / x) < 0.01);
  }
}

TEST_CASE("D: iterated-log growth clears the LN bound on [1e6, 1e12]") {
  const auto m = presets::iterated_log_growth();
  for (double x : log_grid(1e6, 1e12, 25)) {
    const double bound = std::log(x) * std::pow(std::log(std::log(x)), 1.5);
    CHECK(D(1.5, x, m, 1e-10) >= bound);
  }
}

TEST_CASE("G_a: identity with D when r = 0") {
  auto m = presets::full_with_death();
  m.r = fn(FunctionFamily::constant, {0.0}, FunctionRole::lysis_rate_r);
  m.kappa = make_fragmentation(FragmentationFamily::beta_symmetric, {3.0});
  for (double a : {0.25, 0.5, 1.5, 2.5}) {
    const double frag = 2 * m.b * (1 - beta_moment(3.0, 1 - a)) / (1 - a);
    for (double x : log_grid(1e-2, 1e8, 20)) {
      const double want = (a - 1) * (D(a, x, m, 1e-10) - frag);
      const double got = G_a(a, x, 0.7, m, 1e-10);
      CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("G_a: fragmentation-only constant") {
  const auto m = null_model(make_fragmentation(FragmentationFamily::uniform01, {}));
  for (double a : {0.5, 1.5}) {
    const double E = 1.0 / (2.0 - a);  // E[U^(1-a)]
    const double want = -2 * m.b * (a - 1) * (1 - E) / (1 - a);
    for (double x : {1.0, 1e3, 1e9}) CHECK(G_a(a, x, 1.0, m, 1e-10) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("G_a: lysis term is non-positive for a < 1") {
  const auto m = presets::full_with_death();
  auto m0 = m;
  m0.r = fn(FunctionFamily::constant, {0.0}, FunctionRole::lysis_rate_r);
  for (double a : {0.25, 0.75}) {
    for (double x : {0.1, 1.0, 100.0}) {
      for (double r_arg : {0.0, 0.5, 10.0, kInfinity}) CHECK(G_a(a, x, r_arg, m, 1e-10) <= G_a(a, x, r_arg, m0, 1e-10));
    }
  }
}

TEST_CASE("G_a: inadmissible exponents are rejected") {
  auto m = presets::full_with_death();  // beta-symmetric(2)
  CHECK_THROWS_AS(G_a(3.0, 1.0, 1.0, m, 1e-10), SpecError);
  CHECK_THROWS_AS(G_a(1.0, 1.0, 1.0, m, 1e-10), SpecError);
  CHECK_NOTHROW(G_a(1.5, 1.0, 1.0, m, 1e-10));
}

TEST_CASE("in_A examples") {
  CHECK(in_A(1.5, make_fragmentation(FragmentationFamily::uniform01, {})));
  CHECK_FALSE(in_A(2.0, make_fragmentation(FragmentationFamily::uniform01, {})));
  CHECK_FALSE(in_A(3.0, make_fragmentation(FragmentationFamily::beta_symmetric, {2.0})));
  for (double a : {1.01, 2.0, 10.0, 100.0}) CHECK(in_A(a, make_fragmentation(FragmentationFamily::point_mass_half, {})));
  CHECK_THROWS_AS(in_A(1.0, make_fragmentation(FragmentationFamily::uniform01, {})), SpecError);
  CHECK_THROWS_AS(in_A(0.5, make_fragmentation(FragmentationFamily::uniform01, {})), SpecError);
}

TEST_CASE("check_SN: subcritical preset and null model are SN-consistent") {
  const auto grid = log_grid(1.0, 1e12, 49);
  const auto sub = check_SN(presets::subcritical(), 0.5, grid);
  CHECK(sub.verdict == Verdict::sn_consistent);
  CHECK(sub.marker == std::string(kHeuristicMarker));
  const auto null = check_SN(null_model(make_fragmentation(FragmentationFamily::uniform01, {})), 0.5, grid);
  CHECK(null.verdict == Verdict::sn_consistent);
  CHECK(null.slope == doctest::Approx(0.0));
  CHECK(check_SN(presets::iterated_log_growth(), 0.5, grid).verdict == Verdict::inconclusive);
  CHECK_THROWS_AS(check_SN(presets::subcritical(), 0.5, log_grid(1.0, 1e6, 20)), SpecError);
  CHECK_THROWS_AS(check_SN(presets::subcritical(), 1.5, grid), SpecError);
}

TEST_CASE("check_LN: iterated-log preset is LN-consistent with x0 <= 1e6") {
  const auto grid = log_grid(1.0, 1e12, 49);
  const auto ln = check_LN(presets::iterated_log_growth(), 1.5, 0.5, grid);
  CHECK(ln.verdict == Verdict::ln_consistent);
  REQUIRE(ln.x0);
  CHECK(*ln.x0 <= 1e6);
  CHECK(ln.marker == std::string(kHeuristicMarker));
  CHECK(check_LN(presets::subcritical(), 1.5, 0.5, grid).verdict == Verdict::inconclusive);
  auto beta = presets::iterated_log_growth();
  beta.kappa = make_fragmentation(FragmentationFamily::beta_symmetric, {2.0});
  CHECK_THROWS_AS(check_LN(beta, 3.0, 0.5, grid), SpecError);
  CHECK_THROWS_AS(check_LN(presets::iterated_log_growth(), 1.5, 0.0, grid), SpecError);
}

TEST_CASE("criteria report serializes the heuristic marker") {
  const auto grid = log_grid(1.0, 1e12, 13);
  const auto rep = criteria_report(presets::subcritical(), 0.5, 0.5, grid, 20.0, 1e-10, true);
  const auto j = to_json(rep);
  CHECK(j.at("marker") == kHeuristicMarker);
  CHECK(j.at("verdict") == "SN-consistent");
  CHECK(j.at("grid").size() == grid.size());
  std::ostringstream csv;
  write_criteria_csv(csv, rep);
  CHECK(csv.str().rfind("x,rho,D,G\r\n", 0) == 0);
  CHECK_THROWS_AS(criteria_report(presets::subcritical(), 1.0, 0.5, grid, 1.0, 1e-10), SpecError);
}

TEST_CASE("GaEvaluator agrees with direct evaluation") {
  const auto m = presets::full_with_death();
  const GaEvaluator G(m, 0.5, 1e-3, 1e3, 1e-10);
  for (double x : {2e-3, 0.37, 1.0, 55.0, 900.0, 5e3}) {
    for (double r_arg : {0.1, 3.0}) {
      const double want = G_a(0.5, x, r_arg, m, 1e-10);
      CHECK(std::abs(G(x, r_arg) - want) <= 1e-5 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("martingale: t = 0 is exactly x0^(1-a)") {
  const auto m = presets::pure_fragmentation();
  const auto r = martingale_Za_check(0.5, 1e-3, 1e3, {0.0}, m, 2.0, nullptr, small(100));
  CHECK(r.estimates[0].mean == std::pow(2.0, 0.5));
  CHECK(r.estimates[0].se == 0.0);
  CHECK(r.z[0] == 0.0);
}

TEST_CASE("martingale: deterministic linear growth keeps Z constant") {
  ModelSpec m;
  m.g = g_linear(0.5);
  m.kappa = make_fragmentation(FragmentationFamily::uniform01, {});
  m.b = 1e-12;
  const auto r = martingale_Za_check(0.5, 1e-3, 1e3, {0.5, 1.0, 2.0}, m, 1.0, nullptr, small(2, 1e-6));
  for (const auto& e : r.estimates) CHECK(rel_err(e.mean, r.target) < 1e-6);
}

TEST_CASE("martingale: pure fragmentation has no drift") {
  const auto m = presets::pure_fragmentation();
  const auto r = martingale_Za_check(0.5, 1e-3, 1e3, {0.5, 1.0, 2.0}, m, 1.0, nullptr, small(3000));
  CHECK(r.max_abs_z < 3);
}

TEST_CASE("martingale: corridor must contain x0") {
  const auto m = presets::pure_fragmentation();
  CHECK_THROWS_AS(martingale_Za_check(0.5, 2.0, 1e3, {1.0}, m, 1.0, nullptr, small(10)), SpecError);
  CHECK_THROWS_AS(martingale_Za_check(0.5, 1e-3, 0.5, {1.0}, m, 1.0, nullptr, small(10)), SpecError);
}

TEST_CASE("explosion probability: T = 0 is exactly 0; iterated-log growth explodes") {
  const auto lg = presets::iterated_log_growth();
  const auto zero = explosion_probability(lg, 1e6, 0.0, nullptr, small(1000));
  CHECK(zero.mean == 0.0);
  CHECK(zero.se == 0.0);
  const auto pos = explosion_probability(lg, 1e6, 10.0, nullptr, small(200));
  CHECK(pos.mean > 0.0);
  const auto sub = presets::subcritical();
  const auto none = explosion_probability(sub, sub.x0, 2.0, nullptr, small(1000));
  CHECK(none.mean == 0.0);
}

TEST_CASE("l_schedule: rejections") {
  CHECK_THROWS_AS(l_schedule(100.0, 1.0, 0.0, 1e-8), SpecError);
  CHECK_THROWS_AS(l_schedule(100.0, 1.0, -1.0, 1e-8), SpecError);
  CHECK_THROWS_AS(l_schedule(2.0, 1.0, 1.0, 1e-8), SpecError);
  CHECK_THROWS_AS(l_schedule(100.0, 0.0, 1.0, 1e-8), SpecError);
}

TEST_CASE("l_schedule: series oracle at b = e^e, delta = 1, eta = 1") {
  const double c = std::log(2.0);
  auto f = [&](double n) { return std::pow((n - 1) * c + 1.0, -2.0); };
  const std::size_t N = 2'000'000;
  long double partial = 0.0L;
  for (std::size_t n = N; n >= 1; --n) partial += f(double(n));  // small terms first
  // Euler-Maclaurin remainder from N + 1
  const double n1 = double(N + 1), base = (n1 - 1) * c + 1.0;
  const double tail = 1.0 / (c * base) + 0.5 * f(n1) + (2.0 * c * std::pow(base, -3.0)) / 12.0;
  const double oracle = double(partial) + tail;
  const auto l = l_schedule(std::exp(std::numbers::e), 1.0, 1.0, 1e-8);
  CHECK(l.lower <= oracle + 1e-12);
  CHECK(oracle <= l.upper + 1e-12);
  CHECK(l.upper - l.lower <= 1e-8);
  CHECK(std::abs(l.value - oracle) < 1e-8);
}

TEST_CASE("l_schedule: decreasing in b and in eta") {
  const std::vector<double> bs = {20.0, 1e3, 1e6}, etas = {0.5, 1.0, 2.0};
  for (double eta : etas) {
    for (std::size_t i = 1; i < bs.size(); ++i) {
      CHECK(l_schedule(bs[i], 1.0, eta, 1e-6).value < l_schedule(bs[i - 1], 1.0, eta, 1e-6).value);
    }
  }
  // every base exceeds 1 here since ln ln 20 > 1
  for (double b : bs) {
    for (std::size_t k = 1; k < etas.size(); ++k) {
      CHECK(l_schedule(b, 1.0, etas[k], 1e-6).value < l_schedule(b, 1.0, etas[k - 1], 1e-6).value);
    }
  }
}
