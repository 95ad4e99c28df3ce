#include "parasim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "parasim/criteria.hpp"
#include "parasim/csv.hpp"
#include "parasim/model_json.hpp"
#include "parasim/population.hpp"
#include "parasim/stats.hpp"

namespace parasim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTrendAlpha = 0.01;
constexpr double kZLimit = 3.0;

struct ExperimentName {
  Experiment e;
  const char* name;
};
constexpr ExperimentName kExperimentNames[] = {
    {Experiment::regime_subcritical, "regime-subcritical"},
    {Experiment::regime_supercritical, "regime-supercritical"},
    {Experiment::regime_explosive, "regime-explosive"},
    {Experiment::no_reservoir_extinction, "no-reservoir-extinction"},
    {Experiment::no_reservoir_explosive, "no-reservoir-explosive"},
    {Experiment::coming_down, "coming-down"},
    {Experiment::many_to_one_suite, "many-to-one-suite"},
    {Experiment::martingale_suite, "martingale-suite"},
    {Experiment::criteria_scan, "criteria-scan"},
};

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& n : kExperimentNames) {
    if (n.e == e) return n.name;
  }
  return "?";
}

std::optional<Experiment> experiment_from(std::string_view name) {
  for (const auto& n : kExperimentNames) {
    if (name == n.name) return n.e;
  }
  return std::nullopt;
}

VersionMismatch::VersionMismatch(std::string mv, std::string tv)
    : std::runtime_error("manifest was written by version " + mv + ", this tool is version " + tv),
      manifest_version(std::move(mv)),
      tool_version(std::move(tv)) {}

// ---------------------------------------------------------------------------
// Config

namespace {

std::vector<double> number_list(const json& j, const char* where) {
  if (!j.is_array()) throw SpecError(std::string(where) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw SpecError(std::string(where) + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

double number_of(const json& j, const char* where) {
  if (!j.is_number()) throw SpecError(std::string(where) + ": expected a number");
  return j.get<double>();
}

std::size_t positive_count(const json& j, const char* where) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) {
    throw SpecError(std::string(where) + ": expected a positive integer");
  }
  return j.get<std::size_t>();
}

Functional functional_from_json(const json& j) {
  reject_unknown_keys(j, {"kind", "K"}, "functionals[]");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw SpecError("functionals[].kind: required string");
  const auto kind = j.at("kind").get<std::string>();
  auto K = [&] {
    if (!j.contains("K")) throw SpecError("functionals[]: '" + kind + "' needs K");
    return number_of(j.at("K"), "functionals[].K");
  };
  if (kind == "one") return Functional::one();
  if (kind == "identity") return Functional::identity();
  if (kind == "indicator-ge") return Functional::indicator_ge(K());
  if (kind == "sup-le") return Functional::sup_le(K());
  throw SpecError("functionals[].kind: unknown functional '" + kind + "'");
}

void fill_defaults(ExperimentConfig& c) {
  auto dflt = [](std::vector<double>& v, std::vector<double> d) {
    if (v.empty()) v = std::move(d);
  };
  switch (c.experiment) {
    case Experiment::regime_subcritical:
      dflt(c.t_list, {2.0});
      dflt(c.K_list, {10.0, 30.0, 100.0});
      break;
    case Experiment::regime_supercritical:
      dflt(c.t_list, {2.0, 4.0, 8.0});
      dflt(c.K_list, {2.0});
      break;
    case Experiment::regime_explosive:
    case Experiment::no_reservoir_explosive:
      dflt(c.t_list, {2.0, 4.0, 8.0});
      break;
    case Experiment::no_reservoir_extinction:
      dflt(c.t_list, {2.0, 4.0, 8.0});
      dflt(c.K_list, {0.1});
      break;
    case Experiment::coming_down:
      dflt(c.t_list, {0.1});
      dflt(c.K_list, {10.0, 100.0, 1000.0});
      break;
    case Experiment::many_to_one_suite:
      dflt(c.t_list, {1.0});
      if (c.functionals.empty()) {
        c.functionals = {Functional::one(), Functional::indicator_ge(0.3), Functional::indicator_ge(0.7)};
      }
      break;
    case Experiment::martingale_suite:
      dflt(c.t_list, {0.5, 1.0, 2.0});
      break;
    case Experiment::criteria_scan:
      break;
  }
  std::sort(c.t_list.begin(), c.t_list.end());
  std::sort(c.K_list.begin(), c.K_list.end());
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  reject_unknown_keys(doc, {"model", "numerics", "experiment", "K_list", "t_list", "output_dir", "a", "eta",
                            "corridor", "functionals", "criteria_grid", "mean_field_points"},
                      "config");
  ExperimentConfig c;
  c.source = doc;
  if (!doc.contains("experiment") || !doc.at("experiment").is_string()) {
    throw SpecError("config.experiment: required string");
  }
  const auto name = doc.at("experiment").get<std::string>();
  const auto e = experiment_from(name);
  if (!e) throw SpecError("config.experiment: unknown experiment '" + name + "'");
  c.experiment = *e;
  if (!doc.contains("model")) throw SpecError("config.model: required");
  c.model = model_from_json(doc.at("model"));
  if (doc.contains("numerics")) c.numerics = numerics_from_json(doc.at("numerics"));
  if (doc.contains("K_list")) c.K_list = number_list(doc.at("K_list"), "config.K_list");
  if (doc.contains("t_list")) c.t_list = number_list(doc.at("t_list"), "config.t_list");
  if (doc.contains("output_dir")) {
    if (!doc.at("output_dir").is_string()) throw SpecError("config.output_dir: expected a string");
    c.output_dir = doc.at("output_dir").get<std::string>();
  }
  if (doc.contains("a")) {
    c.a = number_of(doc.at("a"), "config.a");
    c.a_given = true;
  }
  if (doc.contains("eta")) c.eta = number_of(doc.at("eta"), "config.eta");
  if (doc.contains("corridor")) {
    const auto v = number_list(doc.at("corridor"), "config.corridor");
    if (v.size() != 2) throw SpecError("config.corridor: expected [c, b]");
    c.corridor_lo = v[0];
    c.corridor_hi = v[1];
  }
  if (doc.contains("functionals")) {
    if (!doc.at("functionals").is_array()) throw SpecError("config.functionals: expected an array");
    for (const auto& f : doc.at("functionals")) c.functionals.push_back(functional_from_json(f));
  }
  if (doc.contains("criteria_grid")) {
    const json& g = doc.at("criteria_grid");
    reject_unknown_keys(g, {"lo", "hi", "n"}, "config.criteria_grid");
    if (g.contains("lo")) c.grid_lo = number_of(g.at("lo"), "config.criteria_grid.lo");
    if (g.contains("hi")) c.grid_hi = number_of(g.at("hi"), "config.criteria_grid.hi");
    if (g.contains("n")) {
      c.grid_n = positive_count(g.at("n"), "config.criteria_grid.n");
    }
  }
  if (doc.contains("mean_field_points")) {
    c.mean_field_points = positive_count(doc.at("mean_field_points"), "config.mean_field_points");
  }
  for (double t : c.t_list) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw SpecError("config.t_list: times must be finite and >= 0");
  }
  for (double k : c.K_list) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw SpecError("config.K_list: thresholds must be finite and >= 0");
  }
  fill_defaults(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Preset pinning

namespace {

double reservoir_input_ratio(const ModelSpec& m, double x) {
  double v = eval(m.g, x);
  if (!traits(m.lambda).identically_zero) v += dose_mean(m.doseI) * eval(m.lambda, x);
  return v / x;
}

double reservoir_input_slope(const ModelSpec& m) {
  double s = traits(m.g).asymptotic_slope;
  if (!traits(m.lambda).identically_zero) s += dose_mean(m.doseI) * traits(m.lambda).asymptotic_slope;
  return s;
}

bool ln_condition_holds(const ExperimentConfig& c) {
  const auto grid = log_grid(std::min(c.grid_lo, 1.0), std::max(c.grid_hi, 1e12), std::max<std::size_t>(c.grid_n, 49));
  std::vector<double> candidates;
  if (c.a_given && c.a > 1.0) {
    candidates = {c.a};
  } else {
    candidates = {1.25, 1.5, 1.75, 2.0, 3.0};
  }
  for (double a : candidates) {
    if (!in_A(a, c.model.kappa)) continue;
    if (check_LN(c.model, a, c.eta, grid, c.numerics.quad_tol).verdict == Verdict::ln_consistent) return true;
  }
  return false;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::vector<std::string> pinning_violations(const ExperimentConfig& c) {
  std::vector<std::string> v;
  const ModelSpec& m = c.model;
  const auto scan = log_grid(1e-6, 1e12, 181);
  const bool lambda_zero = traits(m.lambda).identically_zero;
  const std::string name(to_string(c.experiment));
  switch (c.experiment) {
    case Experiment::regime_subcritical: {
      const double s = reservoir_input_slope(m);
      if (!(s < m.b)) {
        v.push_back(name + ": growth plus mean reservoir input must be at most g~ x for large x with g~ < b (asymptotic slope " +
                    fmt(s) + ", b = " + fmt(m.b) + ")");
      }
      break;
    }
    case Experiment::regime_supercritical: {
      double lo = kInfinity;
      for (double x : scan) lo = std::min(lo, reservoir_input_ratio(m, x));
      lo = std::min(lo, reservoir_input_slope(m));
      if (!(lo > m.b)) {
        v.push_back(name + ": growth plus mean reservoir input must be at least g~ x for every x > 0 with g~ > b (infimum of ratio " +
                    fmt(lo) + ", b = " + fmt(m.b) + ")");
      }
      break;
    }
    case Experiment::regime_explosive: {
      bool positive = !lambda_zero;
      for (double x : {1e-12, 1e-6, 1.0}) positive = positive && eval(m.lambda, x) > 0.0;
      for (double x : scan) positive = positive && eval(m.lambda, x) > 0.0;
      if (!positive) v.push_back(name + ": reservoir rate lambda must be positive on (0, inf)");
      if (!ln_condition_holds(c)) {
        v.push_back(name + ": the LN condition D(a,x) >= ln x (ln ln x)^(1+eta) must hold for an admissible a > 1");
      }
      break;
    }
    case Experiment::no_reservoir_extinction: {
      if (!lambda_zero) v.push_back(name + ": reservoir rate lambda must vanish identically");
      if (!traits(m.g).concave) v.push_back(name + ": growth rate g must be concave");
      double alpha = kInfinity, eta = kInfinity;
      for (double x : scan) {
        const double r = rho(x, m);
        if (x <= 1.0) alpha = std::min(alpha, -r / x);
        else eta = std::min(eta, -r);
      }
      if (!(alpha > 0.0 && eta > 0.0)) {
        v.push_back(name + ": rho(x) <= -(alpha x ^ eta) must hold for some alpha, eta > 0 (best alpha " + fmt(alpha) +
                    ", eta " + fmt(eta) + ")");
      }
      break;
    }
    case Experiment::no_reservoir_explosive: {
      if (!lambda_zero) v.push_back(name + ": reservoir rate lambda must vanish identically");
      if (!(eval(m.r, m.x0) > 0.0)) v.push_back(name + ": lysis rate must be positive at the initial load, r(x0) > 0");
      if (!ln_condition_holds(c)) {
        v.push_back(name + ": the LN condition D(a,x) >= ln x (ln ln x)^(1+eta) must hold for an admissible a > 1");
      }
      break;
    }
    case Experiment::coming_down:
      if (!traits(m.r).identically_zero) {
        v.push_back(name + ": lysis reinfection must be absent, r must vanish identically (r is " +
                    std::string(to_string(m.r.family)) + ")");
      }
      break;
    case Experiment::martingale_suite:
      if (!(c.a > 0.0) || c.a == 1.0 || (c.a > 1.0 && !in_A(c.a, m.kappa))) {
        v.push_back(name + ": exponent a must lie in (0,1) or be admissible (E[Theta^(1-a)] finite)");
      }
      if (!(0.0 < c.corridor_lo && c.corridor_lo < m.x0 && m.x0 < c.corridor_hi)) {
        v.push_back(name + ": corridor (c, b) must contain the initial load");
      }
      break;
    case Experiment::many_to_one_suite:
      for (const auto& F : c.functionals) {
        if (!F.bounded() && !has_linear_growth(m)) {
          v.push_back(name + ": unbounded functional " + F.name() + " needs a model without explosion");
        }
      }
      break;
    case Experiment::criteria_scan:
      break;
  }
  return v;
}

void validate_config(const ExperimentConfig& c) {
  const ValidationReport rep = validate_model(c.model);
  if (!rep.ok()) throw ValidationError("model violates well-posedness:\n" + rep.summary());
  try {
    check_numerics(c.numerics);
  } catch (const SpecError& e) {
    throw ValidationError(std::string("numerics: ") + e.what());
  }
  if (c.a == 1.0) throw ValidationError("config.a: a = 1 is excluded");
  const auto v = pinning_violations(c);
  if (!v.empty()) {
    std::string msg = "experiment hypotheses violated:";
    for (const auto& s : v) msg += "\n  " + s;
    throw ValidationError(msg);
  }
}

// ---------------------------------------------------------------------------
// Checksums

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

// ---------------------------------------------------------------------------
// Run

namespace {

json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

json trend_json(const TrendTest& t) {
  return {{"z", t.z}, {"critical", t.critical}, {"alpha", kTrendAlpha}, {"decreasing", t.decreasing}};
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  template <class Fn>
  void write(const std::string& name, Fn&& fill) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    fill(out);
    out.close();
    files_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct StageLog {
  json stages = json::array();
  std::uint64_t seed;
  template <class Fn>
  auto run(const std::string& name, const std::string& purpose, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ostringstream key;
      key << std::hex << std::setw(16) << std::setfill('0') << StreamId{seed, purpose, 0}.key();
      stages.push_back({{"name", name}, {"purpose", purpose}, {"seed_key", key.str()}, {"wall_time_s", wall}});
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  }
};

enum class Statistic { at_least, sup_within, finite };

std::string_view statistic_name(Statistic s) {
  switch (s) {
    case Statistic::at_least: return "fraction_at_least_K";
    case Statistic::sup_within: return "fraction_sup_path_at_most_K";
    case Statistic::finite: return "fraction_finite";
  }
  return "?";
}

json survival_experiment(const ExperimentConfig& c, const MeanFieldCurve* mf, ArtifactWriter& out,
                         StageLog& log, bool& cap) {
  Statistic stat = Statistic::at_least;
  bool over_K = false;
  switch (c.experiment) {
    case Experiment::regime_subcritical: over_K = true; break;
    case Experiment::coming_down: over_K = true; break;
    case Experiment::regime_supercritical: stat = Statistic::sup_within; break;
    case Experiment::regime_explosive:
    case Experiment::no_reservoir_explosive: stat = Statistic::finite; break;
    default: break;
  }
  std::vector<double> Ks = c.K_list;
  if (stat == Statistic::finite) Ks = {0.0};
  const SurvivalStats s = log.run("survival", "survival", [&] {
    return survival_fraction_stats(c.model, c.model.x0, mf, c.t_list, Ks, c.numerics, "survival");
  });
  cap = cap || s.capped > 0;
  const std::size_t T = s.times.size(), K = s.thresholds.size();
  auto est = [&](std::size_t j, std::size_t k) {
    switch (stat) {
      case Statistic::at_least: return s.at_least(j, k);
      case Statistic::sup_within: return s.sup_within(j, k);
      default: return s.finite(j);
    }
  };

  json stats;
  stats["statistic"] = std::string(statistic_name(stat));
  stats["replicates"] = s.replicates;
  stats["capped"] = s.capped;
  json rows = json::array();
  for (std::size_t j = 0; j < T; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      json r = estimate_json(est(j, k));
      r["time"] = s.times[j];
      if (stat != Statistic::finite) r["K"] = s.thresholds[k];
      r["alive"] = estimate_json(s.alive(j));
      rows.push_back(r);
    }
  }
  stats["rows"] = rows;

  auto csv_row = [&](CsvWriter& w, std::size_t j, std::size_t k) {
    const Estimate e = est(j, k);
    w.row(s.times[j], stat == Statistic::finite ? kInfinity : s.thresholds[k], std::string(statistic_name(stat)),
          e.mean, e.se, e.n);
  };
  out.write("fraction_vs_K.csv", [&](std::ostream& o) {
    CsvWriter w(o);
    w.row("time", "K", "statistic", "mean", "se", "n");
    for (std::size_t j = 0; j < T; ++j)
      for (std::size_t k = 0; k < K; ++k) csv_row(w, j, k);
  });
  out.write("fraction_vs_t.csv", [&](std::ostream& o) {
    CsvWriter w(o);
    w.row("time", "K", "statistic", "mean", "se", "n");
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < T; ++j) csv_row(w, j, k);
  });

  json trends = json::array();
  bool all_decreasing = true;
  if (over_K && K >= 2) {
    const std::size_t m = T * (K - 1);
    for (std::size_t j = 0; j < T; ++j) {
      const TrendTest tt = decreasing_trend(s.at_least_rows_over_threshold(j), kTrendAlpha, m);
      json t = trend_json(tt);
      t["over"] = "K";
      t["time"] = s.times[j];
      trends.push_back(t);
      all_decreasing = all_decreasing && tt.decreasing;
    }
  } else if (!over_K && T >= 2) {
    const std::size_t m = K * (T - 1);
    for (std::size_t k = 0; k < K; ++k) {
      const auto rows_k = stat == Statistic::at_least     ? s.at_least_rows_over_time(k)
                          : stat == Statistic::sup_within ? s.sup_within_rows_over_time(k)
                                                          : s.finite_rows_over_time();
      const TrendTest tt = decreasing_trend(rows_k, kTrendAlpha, m);
      json t = trend_json(tt);
      t["over"] = "t";
      if (stat != Statistic::finite) t["K"] = s.thresholds[k];
      trends.push_back(t);
      all_decreasing = all_decreasing && tt.decreasing;
    }
  }
  stats["trend"] = trends;
  stats["all_decreasing"] = all_decreasing;

  if (c.experiment == Experiment::regime_subcritical && K >= 2) {
    json env = json::array();
    for (std::size_t j = 0; j < T; ++j) {
      const Estimate e0 = s.at_least(j, 0);
      const double C = e0.mean * std::sqrt(s.thresholds[0]);
      for (std::size_t k = 1; k < K; ++k) {
        const Estimate e = s.at_least(j, k);
        const double bound = C / std::sqrt(s.thresholds[k]);
        env.push_back({{"time", s.times[j]}, {"K", s.thresholds[k]}, {"C", C}, {"C_se", e0.se * std::sqrt(s.thresholds[0])},
                       {"bound", bound}, {"estimate", estimate_json(e)}, {"below", e.mean <= bound}});
      }
    }
    stats["envelope"] = env;
  }
  return stats;
}

json many_to_one_experiment(const ExperimentConfig& c, const MeanFieldCurve* mf, ArtifactWriter& out,
                            StageLog& log, bool& cap) {
  const double t = c.t_list.front();
  const auto res = log.run("many-to-one", "m2o-population", [&] {
    return many_to_one_check(c.functionals, t, c.model, mf, c.numerics, c.numerics);
  });
  json stats;
  stats["time"] = t;
  json rows = json::array();
  bool all_ok = true;
  for (std::size_t f = 0; f < res.size(); ++f) {
    const bool ok = std::abs(res[f].z) < kZLimit;
    all_ok = all_ok && ok;
    rows.push_back({{"F", c.functionals[f].name()},
                    {"population", estimate_json(res[f].lhs)},
                    {"spine", estimate_json(res[f].rhs)},
                    {"z", res[f].z},
                    {"z_limit", kZLimit},
                    {"pass", ok},
                    {"capped", res[f].capped}});
    cap = cap || res[f].capped > 0;
  }
  stats["rows"] = rows;
  stats["all_pass"] = all_ok;

  std::size_t capped = 0;
  const auto pmf = log.run("count-pmf", "count-pmf", [&] { return population_count_pmf(c.model, t, mf, c.numerics, &capped); });
  cap = cap || capped > 0;
  std::vector<double> exact;
  double mass = 0.0;
  for (std::uint64_t n = 0; n < pmf.size() || 1.0 - mass > 1e-12; ++n) {
    exact.push_back(birth_death_pmf(c.model.b, c.model.d, t, n));
    mass += exact.back();
    if (n > 100000) break;
  }
  const double tv = total_variation(pmf, exact);
  out.write("pmf.csv", [&](std::ostream& o) {
    CsvWriter w(o);
    w.row("n", "empirical", "exact");
    for (std::size_t n = 0; n < std::max(pmf.size(), exact.size()); ++n) {
      w.row(n, n < pmf.size() ? pmf[n] : 0.0, n < exact.size() ? exact[n] : 0.0);
    }
  });
  // mean count against e^{(b-d)t}
  const double M = static_cast<double>(c.numerics.replicates);
  double mean = 0.0, sq = 0.0;
  for (std::size_t n = 0; n < pmf.size(); ++n) {
    mean += static_cast<double>(n) * pmf[n];
    sq += static_cast<double>(n * n) * pmf[n];
  }
  const double var = M > 1 ? (sq - mean * mean) * M / (M - 1) : 0.0;
  const Estimate count{mean, std::sqrt(std::max(var, 0.0) / M), c.numerics.replicates};
  const double expected = std::exp((c.model.b - c.model.d) * t);
  stats["count"] = {{"estimate", estimate_json(count)},
                    {"expected", expected},
                    {"z", z_score(count, expected)},
                    {"tv_distance", tv},
                    {"capped", capped}};
  return stats;
}

json martingale_experiment(const ExperimentConfig& c, const MeanFieldCurve* mf, ArtifactWriter& out,
                           StageLog& log) {
  const auto res = log.run("martingale", "martingale", [&] {
    return martingale_Za_check(c.a, c.corridor_lo, c.corridor_hi, c.t_list, c.model, c.model.x0, mf, c.numerics,
                               c.numerics.quad_tol);
  });
  out.write("martingale_drift.csv", [&](std::ostream& o) {
    CsvWriter w(o);
    w.row("time", "mean", "se", "n", "target", "z");
    for (std::size_t k = 0; k < res.times.size(); ++k) {
      w.row(res.times[k], res.estimates[k].mean, res.estimates[k].se, res.estimates[k].n, res.target, res.z[k]);
    }
  });
  json rows = json::array();
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    json r = estimate_json(res.estimates[k]);
    r["time"] = res.times[k];
    r["z"] = res.z[k];
    rows.push_back(r);
  }
  return {{"a", res.a},
          {"corridor", {res.c, res.b_high}},
          {"target", res.target},
          {"rows", rows},
          {"max_abs_z", res.max_abs_z},
          {"z_limit", kZLimit},
          {"pass", res.max_abs_z < kZLimit},
          {"exited", res.exited}};
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunResult run_experiment(ExperimentConfig c, const RunOptions& opts) {
  if (opts.master_seed) c.numerics.master_seed = *opts.master_seed;
  if (opts.workers) c.numerics.workers = *opts.workers;
  validate_config(c);

  fs::path dir = opts.out_dir ? *opts.out_dir : fs::path(c.output_dir.empty() ? "parasim-out" : c.output_dir);
  fs::create_directories(dir);
  ArtifactWriter out(dir);
  StageLog log{json::array(), c.numerics.master_seed};
  bool cap = false;

  double horizon = c.numerics.T;
  for (double t : c.t_list) horizon = std::max(horizon, t);
  const MeanFieldCurve curve = log.run("mean-field", "mean-field", [&] {
    return solve_mean_field(c.model, c.model.x0, horizon, uniform_grid(horizon, c.mean_field_points), c.numerics);
  });
  out.write("mean_field.csv", [&](std::ostream& o) { write_mean_field_csv(o, curve); });
  const MeanFieldCurve* mf = traits(c.model.r).identically_zero ? nullptr : &curve;

  const auto grid = log_grid(c.grid_lo, c.grid_hi, c.grid_n);
  CriteriaReport report;
  try {
    report = log.run("criteria", "criteria", [&] {
      return criteria_report(c.model, c.a, c.eta, grid, curve.values.back(), c.numerics.quad_tol,
                             c.experiment == Experiment::criteria_scan);
    });
  } catch (const SpecError& e) {
    throw ValidationError(std::string("criteria report: ") + e.what());
  }
  out.write_json("criteria.json", to_json(report));
  out.write("criteria.csv", [&](std::ostream& o) { write_criteria_csv(o, report); });

  json stats;
  switch (c.experiment) {
    case Experiment::many_to_one_suite: stats = many_to_one_experiment(c, mf, out, log, cap); break;
    case Experiment::martingale_suite: stats = martingale_experiment(c, mf, out, log); break;
    case Experiment::criteria_scan:
      stats = {{"verdict", std::string(to_string(report.check.verdict))},
               {"marker", report.check.marker},
               {"tail_slope", report.check.slope},
               {"tail_slope_se", report.check.slope_se},
               {"quad_tol", report.quad_tol}};
      break;
    default: stats = survival_experiment(c, mf, out, log, cap); break;
  }
  stats["experiment"] = std::string(to_string(c.experiment));
  stats["replicates"] = c.numerics.replicates;
  stats["master_seed"] = c.numerics.master_seed;
  stats["mean_field"] = {{"converged", curve.converged},
                         {"iterations", curve.iterations},
                         {"residual", curve.residual},
                         {"tol_fp", c.numerics.tol_fp},
                         {"note", curve.note}};
  stats["cap_flagged"] = cap;
  out.write_json("stats.json", stats);

  json effective = c.source;
  effective["numerics"] = to_json(c.numerics);
  effective["numerics"].erase("workers");
  effective.erase("output_dir");

  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = effective;
  manifest["config_sha256"] = sha256_hex(effective.dump());
  manifest["master_seed"] = c.numerics.master_seed;
  manifest["workers"] = c.numerics.workers;
  manifest["experiment"] = std::string(to_string(c.experiment));
  manifest["stages"] = log.stages;
  json inventory = json::array();
  for (const auto& f : out.files()) {
    inventory.push_back({{"file", f}, {"sha256", sha256_file(dir / f)}, {"bytes", fs::file_size(dir / f)}});
  }
  manifest["outputs"] = inventory;
  manifest["cap_flagged"] = cap;
  manifest["created_utc"] = utc_now();
  {
    std::ofstream m(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    m << manifest.dump(2) << '\n';
  }
  return RunResult{dir, cap, manifest, stats};
}

ReplayResult replay(const fs::path& manifest_path, const RunOptions& opts) {
  std::ifstream in(manifest_path);
  if (!in) throw SpecError("cannot open manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("manifest is not valid JSON: ") + e.what());
  }
  for (const char* key : {"tool_version", "config", "master_seed", "outputs"}) {
    if (!manifest.contains(key)) throw SpecError(std::string("manifest: missing '") + key + "'");
  }
  const auto version = manifest.at("tool_version").get<std::string>();
  if (version != kToolVersion) throw VersionMismatch(version, kToolVersion);

  ExperimentConfig cfg = parse_config(manifest.at("config"));
  RunOptions ro = opts;
  ro.master_seed = manifest.at("master_seed").get<std::uint64_t>();
  if (!ro.workers && manifest.contains("workers")) ro.workers = manifest.at("workers").get<unsigned>();
  if (!ro.out_dir) ro.out_dir = manifest_path.parent_path() / "replay";

  ReplayResult r;
  r.run = run_experiment(std::move(cfg), ro);
  std::map<std::string, std::string> recorded;
  for (const auto& o : manifest.at("outputs")) recorded[o.at("file").get<std::string>()] = o.at("sha256").get<std::string>();
  std::map<std::string, std::string> fresh;
  for (const auto& o : r.run.manifest.at("outputs")) fresh[o.at("file").get<std::string>()] = o.at("sha256").get<std::string>();
  for (const auto& [file, sum] : fresh) {
    auto it = recorded.find(file);
    if (it == recorded.end() || it->second != sum) r.mismatched.push_back(file);
  }
  for (const auto& [file, _] : recorded) {
    if (!fresh.count(file)) r.mismatched.push_back(file);
  }
  r.identical = r.mismatched.empty();
  return r;
}

}  // namespace parasim
