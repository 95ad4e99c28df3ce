// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "parasim/criteria.hpp"
#include "parasim/harness.hpp"
#include "parasim/population.hpp"
#include "parasim/presets.hpp"
#include "parasim/sde.hpp"
#include "parasim/spinal.hpp"

using namespace parasim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

unsigned g_workers = 1;

NumericsSpec numerics(std::size_t M, double dt, std::uint64_t seed) {
  NumericsSpec n;
  n.replicates = M;
  n.dt = dt;
  n.master_seed = seed;
  n.workers = g_workers;
  return n;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("parasim-acceptance-" + name);
  fs::remove_all(p);
  return p;
}

MeanFieldCurve curve_for(const ModelSpec& m, double T, std::uint64_t seed) {
  return solve_mean_field(m, m.x0, T, uniform_grid(T, 40), numerics(1000, 1e-2, seed));
}

// 1
void mean_cell_count(Outcome& o) {
  const auto m = presets::full_with_death();  // b = 1, d = 0.5
  const auto mf = curve_for(m, 2.0, 101);
  const auto n = numerics(10'000, 1e-2, 1);
  std::vector<double> N(n.replicates);
  for (std::size_t i = 0; i < N.size(); ++i) {
    N[i] = double(simulate_population(m, m.x0, 2.0, &mf, n, StreamId{n.master_seed, "count", i}).N());
  }
  const auto e = estimate_mean(N);
  const double ratio = e.mean / std::numbers::e, se = e.se / std::numbers::e;
  o.detail << "e^-1 mean N = " << ratio << " (SE " << se << ") ";
  o.require(std::abs(ratio - 1.0) < 3 * se, "|ratio - 1| < 3 SE");
}

// 2
void birth_death(Outcome& o) {
  const double b = 1.0, d = 0.5, t = 1.0;
  const std::size_t M = 100'000;
  std::vector<double> exact;
  for (std::uint64_t n = 0; n < 400; ++n) exact.push_back(birth_death_pmf(b, d, t, n));

  std::vector<double> direct(exact.size(), 0.0);
  DriverStream s(2, "sample-N", 0);
  for (std::size_t i = 0; i < M; ++i) {
    const auto n = sample_N(b, d, t, s);
    direct[std::min<std::uint64_t>(n, exact.size() - 1)] += 1.0 / double(M);
  }
  ModelSpec m;
  m.kappa = make_fragmentation(FragmentationFamily::uniform01, {});
  m.b = b;
  m.d = d;
  std::size_t capped = 0;
  auto sim = population_count_pmf(m, t, nullptr, numerics(M, 1e-3, 2), &capped);
  sim.resize(std::max(sim.size(), exact.size()), 0.0);
  exact.resize(sim.size(), 0.0);
  direct.resize(sim.size(), 0.0);
  const double tv_direct = total_variation(direct, exact), tv_sim = total_variation(sim, exact);
  o.detail << "TV(sample_N) = " << tv_direct << ", TV(population, dt=1e-3) = " << tv_sim << " ";
  o.require(tv_direct < 0.02, "sample_N TV < 0.02");
  o.require(tv_sim < 0.02, "population TV < 0.02");
  o.require(capped == 0, "no capped replicates");
}

// 3
void many_to_one(Outcome& o) {
  const std::vector<Functional> Fs = {Functional::one(), Functional::indicator_ge(0.3), Functional::indicator_ge(0.7)};
  double worst = 0.0;
  for (const auto& name : {"pure-fragmentation", "full-with-death"}) {
    const auto m = *presets::by_name(name);
    MeanFieldCurve mf;
    const MeanFieldCurve* pmf = nullptr;
    if (!traits(m.r).identically_zero) {
      mf = curve_for(m, 1.0, 103);
      pmf = &mf;
    }
    const auto n = numerics(10'000, 2e-3, 3);
    const auto rs = many_to_one_check(Fs, 1.0, m, pmf, n, n);
    o.detail << name << " z = {";
    for (std::size_t k = 0; k < rs.size(); ++k) {
      o.detail << (k ? ", " : "") << rs[k].z;
      worst = std::max(worst, std::abs(rs[k].z));
      o.require(rs[k].capped == 0, "no capped replicates");
    }
    o.detail << "} ";
  }
  o.require(worst < 3, "every |z| < 3");
}

// 4
void mean_field(Outcome& o) {
  const auto m = presets::linear_mean_field();
  auto n = numerics(10'000, 1e-2, 4);
  n.tol_fp = 1e-3;
  const auto grid = uniform_grid(4.0, 40);
  const auto mf = solve_mean_field(m, m.x0, 4.0, grid, n);
  double sup = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    sup = std::max(sup, std::abs(mf.values[j] - (0.6 + 0.4 * std::exp(-0.5 * grid[j]))));
  }
  o.detail << "sup error = " << sup << " (limit 0.03), iterations = " << mf.iterations << ", converged = " << mf.converged << " ";
  o.require(mf.converged, "converged");
  o.require(mf.iterations <= 5, "at most 5 iterations");
  o.require(sup < 0.05 * 0.6, "sup error < 0.03");
}

// 5
void martingale(Outcome& o) {
  struct Case {
    const char* preset;
    double a, dt;
  };
  for (const auto& c : {Case{"pure-fragmentation", 0.5, 1e-2}, Case{"fragmentation-diffusion", 1.5, 1e-3}}) {
    const auto m = *presets::by_name(c.preset);
    const auto r = martingale_Za_check(c.a, 1e-3, 1e3, {0.5, 1.0, 2.0}, m, m.x0, nullptr, numerics(10'000, c.dt, 5));
    o.detail << c.preset << " a=" << c.a << " max|z| = " << r.max_abs_z << "; ";
    o.require(r.max_abs_z < 3, std::string(c.preset) + " max |z| < 3");
  }
}

// 6
void coupling(Outcome& o) {
  const auto base = presets::full_with_death();
  const auto mf = curve_for(base, 2.0, 106);
  auto hot = base;
  hot.g = make_function(FunctionFamily::linear, {0.6}, FunctionRole::growth_g);
  hot.lambda = make_function(FunctionFamily::constant, {0.6}, FunctionRole::reservoir_rate_lambda);
  const auto n = numerics(1, 1e-2, 6);
  std::size_t v_x0 = 0, v_model = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    v_x0 += couple(SpinalVariant::Y(), 1.0, base, SpinalVariant::Y(), 2.0, base, 2.0, &mf, n, StreamId{6, "x0", i}).violations;
    v_model += couple(SpinalVariant::Y(), 1.0, base, SpinalVariant::Y(), 1.0, hot, 2.0, &mf, n, StreamId{6, "g-lambda", i}).violations;
  }
  o.detail << "violations: x0-ordered " << v_x0 << ", (g, lambda)-ordered " << v_model << " ";
  o.require(v_x0 == 0 && v_model == 0, "0 violations");
}

// 7
void explosion(Outcome& o) {
  const auto sub = presets::subcritical();
  const auto mf = curve_for(sub, 10.0, 107);
  const auto sn = explosion_probability(sub, sub.x0, 10.0, &mf, numerics(10'000, 1e-2, 7));
  const auto sn_count = std::llround(sn.mean * double(sn.n));

  const auto ln_model = presets::iterated_log_growth();
  auto n = numerics(10'000, 1e-2, 7);
  const auto ln = explosion_probability(ln_model, 1e6, 10.0, nullptr, n);
  n.x_explode *= 2;
  const auto ln2 = explosion_probability(ln_model, 1e6, 10.0, nullptr, n);
  const double c1 = ln.mean * double(ln.n), c2 = ln2.mean * double(ln2.n);
  const double change = c1 > 0 ? std::abs(c2 - c1) / c1 : 1.0;

  const auto sg = presets::strong_growth();
  const auto sg_p = explosion_probability(sg, 1e6, 10.0, nullptr, numerics(10'000, 1e-2, 7));

  o.detail << "SN exploded = " << sn_count << "/" << sn.n << "; LN (iterated-log) exploded = " << c1 << ", with doubled sentinel "
           << c2 << " (change " << 100 * change << "%); strong-growth exploded fraction " << sg_p.mean << " ";
  o.require(sn_count == 0, "SN preset: 0 exploded");
  o.require(c1 > 0, "LN preset: positive count");
  o.require(change < 0.2, "sentinel sensitivity < 20%");
}

// 8
json run_cfg(const json& cfg, const std::string& name) {
  return run_experiment(parse_config(cfg), {scratch(name), g_workers, std::nullopt, true}).stats;
}

void regimes(Outcome& o) {
  const auto sub = run_cfg({{"experiment", "regime-subcritical"},
                            {"model", {{"preset", "subcritical"}}},
                            {"numerics", {{"dt", 0.01}, {"replicates", 2000}, {"master_seed", 11}}},
                            {"t_list", {2.0}},
                            {"K_list", {10, 30, 100}}},
                           "subcritical");
  bool below = true;
  for (const auto& e : sub.at("envelope")) below = below && e.at("below").get<bool>();
  o.detail << "subcritical: decreasing in K " << sub.at("all_decreasing") << ", below C/sqrt(K) " << below << "; ";
  o.require(sub.at("all_decreasing").get<bool>(), "subcritical decreasing in K");
  o.require(below, "subcritical envelope");

  const auto sup = run_cfg({{"experiment", "regime-supercritical"},
                            {"model", {{"preset", "supercritical"}}},
                            {"numerics", {{"dt", 0.01}, {"replicates", 2000}, {"master_seed", 12}}},
                            {"t_list", {2, 4, 8}},
                            {"K_list", {2}}},
                           "supercritical");
  o.detail << "supercritical sup-path <= K decreasing in t " << sup.at("all_decreasing") << "; ";
  o.require(sup.at("all_decreasing").get<bool>(), "supercritical decreasing in t");

  const auto ext = run_cfg({{"experiment", "no-reservoir-extinction"},
                            {"model", {{"preset", "no-reservoir-extinction"}}},
                            {"numerics", {{"dt", 0.01}, {"replicates", 2000}, {"master_seed", 14}}},
                            {"t_list", {2, 4, 8}},
                            {"K_list", {0.1}}},
                           "extinction");
  o.detail << "no-reservoir extinction load > 0.1 decreasing in t " << ext.at("all_decreasing") << " ";
  o.require(ext.at("all_decreasing").get<bool>(), "extinction decreasing in t");
  for (const auto* s : {&sub, &sup, &ext}) o.require(!s->at("cap_flagged").get<bool>(), "no cap events");
}

// 9
void numerics_checks(Outcome& o) {
  struct Triple {
    double a, x;
    JumpSizeLaw pi;
  };
  // tail regime (x well above the jump scale) so the oracle's own SE stays near 1e-5
  const std::vector<Triple> triples = {
      {2.0, 10.0, make_jump_law(JumpFamily::point_mass, {1.0}, JumpRole::parasite_jump_pi)},
      {0.5, 20.0, make_jump_law(JumpFamily::point_mass, {2.0}, JumpRole::parasite_jump_pi)},
      {1.5, 5.0, make_jump_law(JumpFamily::point_mass, {0.3}, JumpRole::parasite_jump_pi, 2.0)},
      {0.25, 3.0, make_jump_law(JumpFamily::exponential, {0.5}, JumpRole::parasite_jump_pi)},
      {2.0, 20.0, make_jump_law(JumpFamily::exponential, {1.0}, JumpRole::parasite_jump_pi, 0.5)},
      {3.0, 50.0, make_jump_law(JumpFamily::exponential, {2.0}, JumpRole::parasite_jump_pi)},
      {0.75, 10.0, make_jump_law(JumpFamily::uniform_interval, {0.0, 2.0}, JumpRole::parasite_jump_pi)},
      {1.5, 30.0, make_jump_law(JumpFamily::uniform_interval, {1.0, 4.0}, JumpRole::parasite_jump_pi, 1.5)},
      {0.5, 100.0, make_jump_law(JumpFamily::truncated_pareto, {2.5, 1.0, 100.0}, JumpRole::parasite_jump_pi)},
      {2.5, 50.0, make_jump_law(JumpFamily::truncated_pareto, {1.5, 0.5, 20.0}, JumpRole::parasite_jump_pi)},
  };
  double worst_ia = 0.0, worst_se = 0.0;
  std::uint64_t rep = 0;
  for (const auto& t : triples) {
    DriverStream s(9, "ia-oracle", rep++);
    std::vector<double> y(2'000'000);
    for (auto& yi : y) {
      const double z = sample(t.pi, s), v = s.uniform();
      yi = t.pi.mass * t.a * z * z / (t.x * t.x) * std::pow(1.0 + z * v / t.x, -1.0 - t.a) * (1.0 - v);
    }
    const auto mc = estimate_mean(y);
    worst_ia = std::max(worst_ia, std::abs(I_a(t.a, t.x, t.pi, 1e-10) - mc.mean));
    worst_se = std::max(worst_se, mc.se);
  }
  o.detail << "I_a max |quad - MC| = " << worst_ia << " (oracle SE <= " << worst_se << "); ";
  o.require(worst_ia < 1e-4, "I_a within 1e-4");

  auto m = presets::full_with_death();
  m.r = make_function(FunctionFamily::constant, {0.0}, FunctionRole::lysis_rate_r);
  m.kappa = make_fragmentation(FragmentationFamily::beta_symmetric, {3.0});
  double worst_id = 0.0;
  for (double a : {0.25, 0.5, 1.5, 2.5}) {
    const double E = theta_moment(m.kappa, 1 - a);
    const double frag = 2 * m.b * (1 - E) / (1 - a);
    for (double x : log_grid(1e-2, 1e8, 20)) {
      const double want = (a - 1) * (D(a, x, m, 1e-10) - frag);
      worst_id = std::max(worst_id, std::abs(G_a(a, x, 1.0, m, 1e-10) - want) / std::max(1.0, std::abs(want)));
    }
  }
  o.detail << "G_a/D identity max rel = " << worst_id << "; ";
  o.require(worst_id < 1e-10, "identity to 1e-10");

  ModelSpec gm;
  gm.g = make_function(FunctionFamily::linear, {0.3}, FunctionRole::growth_g);
  gm.sigma2 = make_function(FunctionFamily::linear, {0.5}, FunctionRole::diffusion_sigma2);
  gm.p = make_function(FunctionFamily::linear, {0.5}, FunctionRole::jump_rate_p);
  gm.pi = make_jump_law(JumpFamily::exponential, {0.2}, JumpRole::parasite_jump_pi, 1.5);
  TestFunction sq = TestFunction::square();
  sq.degree = -1;
  double worst_gen = 0.0;
  for (double x : {0.1, 1.0, 7.0, 100.0}) {
    const double want = 0.3 * x * 2 * x + 0.5 * x * 2 + 0.5 * x * 1.5 * 2 * 0.2 * 0.2;
    worst_gen = std::max(worst_gen, std::abs(apply_generator(sq, x, gm, 1e-10) - want) / std::abs(want));
  }
  o.detail << "generator x^2 max rel = " << worst_gen;
  o.require(worst_gen < 1e-8, "generator to 1e-8");
}

// 10
void reproducibility(Outcome& o) {
  const std::vector<json> cfgs = {
      {{"experiment", "many-to-one-suite"},
       {"model", {{"preset", "full-with-death"}}},
       {"numerics", {{"dt", 0.01}, {"replicates", 1000}, {"master_seed", 21}}}},
      {{"experiment", "regime-supercritical"},
       {"model", {{"preset", "supercritical"}}},
       {"numerics", {{"dt", 0.01}, {"replicates", 1000}, {"master_seed", 22}}},
       {"t_list", {1, 2}},
       {"K_list", {2}}},
  };
  int k = 0;
  for (const auto& cfg : cfgs) {
    const auto dir = scratch("replay-" + std::to_string(k++));
    run_experiment(parse_config(cfg), {dir / "run", 1u, std::nullopt, true});
    const auto manifest = dir / "run" / "manifest.json";
    const auto one = replay(manifest, {dir / "w1", 1u, std::nullopt, true});
    const auto eight = replay(manifest, {dir / "w8", 8u, std::nullopt, true});
    o.detail << cfg.at("experiment").get<std::string>() << ": workers 1 identical " << one.identical << ", workers 8 identical "
             << eight.identical << "; ";
    o.require(one.identical && eight.identical, "identical checksums");
  }
}

}  // namespace

int main() {
  g_workers = std::max(1u, std::thread::hardware_concurrency());
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"mean cell count", mean_cell_count},
      {"birth-death law", birth_death},
      {"many-to-one", many_to_one},
      {"mean-field fixed point", mean_field},
      {"martingale Z^(a)", martingale},
      {"coupling monotonicity", coupling},
      {"explosion dichotomy", explosion},
      {"regime experiments", regimes},
      {"criteria numerics", numerics_checks},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %-24s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
