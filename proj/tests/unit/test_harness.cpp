#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "parasim/criteria.hpp"
#include "parasim/harness.hpp"
#include "parasim/model_json.hpp"
#include "parasim/presets.hpp"

using namespace parasim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("parasim-unit-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("config: unknown keys and experiments are rejected") {
  CHECK_THROWS_WITH_AS(parse_config({{"experiment", "criteria-scan"}, {"model", {{"preset", "subcritical"}}}, {"extra", 1}}),
                       doctest::Contains("unknown key 'extra'"), SpecError);
  CHECK_THROWS_AS(parse_config({{"experiment", "nope"}, {"model", {{"preset", "subcritical"}}}}), SpecError);
  CHECK(experiment_from("coming-down") == Experiment::coming_down);
  CHECK(to_string(Experiment::many_to_one_suite) == "many-to-one-suite");
}

TEST_CASE("config: per-experiment defaults") {
  const auto c = parse_config({{"experiment", "regime-subcritical"}, {"model", {{"preset", "subcritical"}}}});
  CHECK(c.K_list == std::vector<double>{10, 30, 100});
  const auto m = parse_config({{"experiment", "many-to-one-suite"}, {"model", {{"preset", "pure-fragmentation"}}}});
  CHECK(m.functionals.size() == 3);
}

TEST_CASE("pinning: coming-down with lysis is rejected naming the hypothesis") {
  auto c = parse_config({{"experiment", "coming-down"},
                         {"model", {{"preset", "coming-down"}, {"r", {{"family", "saturating-hill"}, {"params", {0.3}}}}}}});
  const auto v = pinning_violations(c);
  CHECK(mentions(v, "lysis reinfection must be absent"));
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c.model = presets::coming_down();
  CHECK(pinning_violations(c).empty());
}

TEST_CASE("pinning: no-reservoir experiments need lambda = 0") {
  auto c = parse_config({{"experiment", "no-reservoir-extinction"}, {"model", {{"preset", "no-reservoir-extinction"}}}});
  CHECK(pinning_violations(c).empty());
  c.model.lambda = make_function(FunctionFamily::constant, {0.1}, FunctionRole::reservoir_rate_lambda);
  CHECK(mentions(pinning_violations(c), "lambda must vanish identically"));
  c.model = presets::no_reservoir_extinction();
  c.model.g = make_function(FunctionFamily::power, {1.0, 2.0}, FunctionRole::growth_g);
  CHECK(mentions(pinning_violations(c), "concave"));
}

TEST_CASE("pinning: regime presets satisfy their hypotheses and others do not") {
  for (auto [exp, preset] : {std::pair{"regime-subcritical", "subcritical"}, std::pair{"regime-supercritical", "supercritical"},
                             std::pair{"regime-explosive", "explosive"}, std::pair{"no-reservoir-explosive", "no-reservoir-explosive"}}) {
    CAPTURE(exp);
    const auto c = parse_config({{"experiment", exp}, {"model", {{"preset", preset}}}});
    CHECK(pinning_violations(c).empty());
  }
  const auto wrong = parse_config({{"experiment", "regime-subcritical"}, {"model", {{"preset", "supercritical"}}}});
  CHECK_FALSE(pinning_violations(wrong).empty());
  const auto wrong2 = parse_config({{"experiment", "regime-supercritical"}, {"model", {{"preset", "subcritical"}}}});
  CHECK_FALSE(pinning_violations(wrong2).empty());
}

TEST_CASE("pinning: invalid model clauses are reported") {
  auto c = parse_config({{"experiment", "criteria-scan"}, {"model", {{"preset", "subcritical"}}}});
  c.model.p = make_function(FunctionFamily::affine, {0.5, 1.0}, FunctionRole::jump_rate_p);
  CHECK_THROWS_WITH_AS(validate_config(c), doctest::Contains("p(0)=0"), ValidationError);
}

TEST_CASE("sha256 of a known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run: criteria scan on the subcritical preset is SN-consistent") {
  const auto dir = scratch("scan");
  auto c = parse_config({{"experiment", "criteria-scan"},
                         {"model", {{"preset", "subcritical"}}},
                         {"numerics", {{"dt", 0.01}, {"replicates", 1000}, {"master_seed", 19}}},
                         {"a", 0.5}});
  const auto r = run_experiment(c, {dir, 1, std::nullopt, true});
  CHECK(r.stats.at("verdict") == "SN-consistent");
  CHECK(r.stats.at("marker") == kHeuristicMarker);
  for (const char* f : {"manifest.json", "stats.json", "criteria.json", "criteria.csv", "mean_field.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto manifest = read_json(dir / "manifest.json");
  CHECK(manifest.at("tool_version") == kToolVersion);
  for (const auto& o : manifest.at("outputs")) {
    CHECK(sha256_file(dir / o.at("file").get<std::string>()) == o.at("sha256").get<std::string>());
  }
}

TEST_CASE("run: many-to-one suite passes every row") {
  const auto dir = scratch("m2o");
  auto c = parse_config({{"experiment", "many-to-one-suite"},
                         {"model", {{"preset", "pure-fragmentation"}}},
                         {"numerics", {{"dt", 0.01}, {"replicates", 2000}, {"master_seed", 17}}}});
  const auto r = run_experiment(c, {dir, 1, std::nullopt, true});
  REQUIRE(r.stats.at("rows").size() == 3);
  for (const auto& row : r.stats.at("rows")) {
    CHECK(std::abs(row.at("z").get<double>()) < 3);
    CHECK(row.at("population").contains("se"));
  }
  CHECK(fs::exists(dir / "pmf.csv"));
}

TEST_CASE("replay: identical, across workers, altered seed, version mismatch") {
  const auto dir = scratch("replay");
  auto c = parse_config({{"experiment", "martingale-suite"},
                         {"model", {{"preset", "pure-fragmentation"}}},
                         {"numerics", {{"dt", 0.01}, {"replicates", 1000}, {"master_seed", 5}}},
                         {"a", 0.5},
                         {"t_list", {0.5, 1.0}}});
  const auto first = run_experiment(c, {dir / "run", 1, std::nullopt, true});
  const auto manifest = dir / "run" / "manifest.json";

  const auto same = replay(manifest, {dir / "same", 1, std::nullopt, true});
  CHECK(same.identical);
  const auto eight = replay(manifest, {dir / "eight", 8, std::nullopt, true});
  CHECK(eight.identical);
  CHECK(eight.mismatched.empty());

  auto m = read_json(manifest);
  m["master_seed"] = 6;
  const auto altered = dir / "altered.json";
  std::ofstream(altered) << m.dump(2);
  const auto other = replay(altered, {dir / "other", 1, std::nullopt, true});
  CHECK_FALSE(other.identical);
  CHECK(std::find(other.mismatched.begin(), other.mismatched.end(), "stats.json") != other.mismatched.end());

  m = read_json(manifest);
  m["tool_version"] = "0.0.1";
  const auto old = dir / "old.json";
  std::ofstream(old) << m.dump(2);
  try {
    replay(old, {dir / "old", 1, std::nullopt, true});
    FAIL("expected a version refusal");
  } catch (const VersionMismatch& e) {
    CHECK(e.manifest_version == "0.0.1");
    CHECK(e.tool_version == kToolVersion);
  }
}
