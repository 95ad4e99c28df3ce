#include "parasim/model_json.hpp"

#include <algorithm>
#include <string>

#include "parasim/presets.hpp"

namespace parasim {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!obj.is_object()) throw SpecError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SpecError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

namespace {

std::vector<double> params_of(const json& j, std::string_view where) {
  if (!j.contains("params")) return {};
  const json& p = j.at("params");
  if (!p.is_array()) throw SpecError(std::string(where) + ".params: expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : p) {
    if (!v.is_number()) throw SpecError(std::string(where) + ".params: expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string family_of(const json& j, std::string_view where) {
  if (!j.contains("family") || !j.at("family").is_string()) {
    throw SpecError(std::string(where) + ".family: required string");
  }
  return j.at("family").get<std::string>();
}

double number(const json& j, std::string_view key, std::string_view where) {
  const json& v = j.at(std::string(key));
  if (!v.is_number()) throw SpecError(std::string(where) + "." + std::string(key) + ": expected a number");
  return v.get<double>();
}

template <class T>
T unsigned_number(const json& j, std::string_view key, std::string_view where) {
  const json& v = j.at(std::string(key));
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw SpecError(std::string(where) + "." + std::string(key) + ": expected a non-negative integer");
  }
  return v.get<T>();
}

}  // namespace

FunctionSpec function_from_json(const json& j, FunctionRole role, std::string_view where) {
  reject_unknown_keys(j, {"family", "params"}, where);
  const std::string name = family_of(j, where);
  const auto fam = function_family_from(name);
  if (!fam) throw SpecError(std::string(where) + ": unknown function family '" + name + "'");
  try {
    return make_function(*fam, params_of(j, where), role);
  } catch (const SpecError& e) {
    throw SpecError(std::string(where) + ": " + e.what());
  }
}

JumpSizeLaw jump_law_from_json(const json& j, JumpRole role, std::string_view where) {
  reject_unknown_keys(j, {"family", "params", "mass"}, where);
  const std::string name = family_of(j, where);
  const auto fam = jump_family_from(name);
  if (!fam) throw SpecError(std::string(where) + ": unknown jump family '" + name + "'");
  const double mass = j.contains("mass") ? number(j, "mass", where) : 1.0;
  try {
    return make_jump_law(*fam, params_of(j, where), role, mass);
  } catch (const SpecError& e) {
    throw SpecError(std::string(where) + ": " + e.what());
  }
}

FragmentationLaw fragmentation_from_json(const json& j, std::string_view where) {
  reject_unknown_keys(j, {"family", "params"}, where);
  const std::string name = family_of(j, where);
  const auto fam = fragmentation_family_from(name);
  if (!fam) throw SpecError(std::string(where) + ": unknown fragmentation family '" + name + "'");
  try {
    return make_fragmentation(*fam, params_of(j, where));
  } catch (const SpecError& e) {
    throw SpecError(std::string(where) + ": " + e.what());
  }
}

ModelSpec model_from_json(const json& j) {
  reject_unknown_keys(
      j, {"preset", "g", "sigma2", "p", "lambda", "r", "pi", "doseI", "doseP", "kappa", "b", "d", "x0"},
      "model");
  ModelSpec m;
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) throw SpecError("model.preset: expected a string");
    const auto name = j.at("preset").get<std::string>();
    auto p = presets::by_name(name);
    if (!p) throw SpecError("model.preset: unknown preset '" + name + "'");
    m = *p;
  }
  auto fn = [&](const char* key, FunctionSpec& dst, FunctionRole role) {
    if (j.contains(key)) dst = function_from_json(j.at(key), role, std::string("model.") + key);
  };
  fn("g", m.g, FunctionRole::growth_g);
  fn("sigma2", m.sigma2, FunctionRole::diffusion_sigma2);
  fn("p", m.p, FunctionRole::jump_rate_p);
  fn("lambda", m.lambda, FunctionRole::reservoir_rate_lambda);
  fn("r", m.r, FunctionRole::lysis_rate_r);
  auto law = [&](const char* key, JumpSizeLaw& dst, JumpRole role) {
    if (j.contains(key)) dst = jump_law_from_json(j.at(key), role, std::string("model.") + key);
  };
  law("pi", m.pi, JumpRole::parasite_jump_pi);
  law("doseI", m.doseI, JumpRole::reservoir_dose_I);
  law("doseP", m.doseP, JumpRole::lysis_dose_P);
  if (j.contains("kappa")) m.kappa = fragmentation_from_json(j.at("kappa"), "model.kappa");
  if (j.contains("b")) m.b = number(j, "b", "model");
  if (j.contains("d")) m.d = number(j, "d", "model");
  if (j.contains("x0")) m.x0 = number(j, "x0", "model");
  return m;
}

NumericsSpec numerics_from_json(const json& j) {
  reject_unknown_keys(j, {"dt", "T", "x_explode", "max_cells", "replicates", "master_seed", "tol_fp",
                          "k_max_fp", "quad_tol", "workers"},
                      "numerics");
  NumericsSpec n;
  if (j.contains("dt")) n.dt = number(j, "dt", "numerics");
  if (j.contains("T")) n.T = number(j, "T", "numerics");
  if (j.contains("x_explode")) n.x_explode = number(j, "x_explode", "numerics");
  if (j.contains("max_cells")) n.max_cells = unsigned_number<std::size_t>(j, "max_cells", "numerics");
  if (j.contains("replicates")) n.replicates = unsigned_number<std::size_t>(j, "replicates", "numerics");
  if (j.contains("master_seed")) n.master_seed = unsigned_number<std::uint64_t>(j, "master_seed", "numerics");
  if (j.contains("tol_fp")) n.tol_fp = number(j, "tol_fp", "numerics");
  if (j.contains("k_max_fp")) n.k_max_fp = unsigned_number<int>(j, "k_max_fp", "numerics");
  if (j.contains("quad_tol")) n.quad_tol = number(j, "quad_tol", "numerics");
  if (j.contains("workers")) n.workers = unsigned_number<unsigned>(j, "workers", "numerics");
  return n;
}

json to_json(const FunctionSpec& f) {
  return {{"family", std::string(to_string(f.family))}, {"params", f.params}};
}

json to_json(const JumpSizeLaw& law) {
  return {{"family", std::string(to_string(law.family))}, {"params", law.params}, {"mass", law.mass}};
}

json to_json(const FragmentationLaw& kappa) {
  return {{"family", std::string(to_string(kappa.family))}, {"params", kappa.params}};
}

json to_json(const ModelSpec& m) {
  return {{"g", to_json(m.g)},         {"sigma2", to_json(m.sigma2)}, {"p", to_json(m.p)},
          {"lambda", to_json(m.lambda)}, {"r", to_json(m.r)},         {"pi", to_json(m.pi)},
          {"doseI", to_json(m.doseI)}, {"doseP", to_json(m.doseP)}, {"kappa", to_json(m.kappa)},
          {"b", m.b},                  {"d", m.d},                    {"x0", m.x0}};
}

json to_json(const NumericsSpec& n) {
  return {{"dt", n.dt},         {"T", n.T},
          {"x_explode", n.x_explode}, {"max_cells", n.max_cells},
          {"replicates", n.replicates}, {"master_seed", n.master_seed},
          {"tol_fp", n.tol_fp}, {"k_max_fp", n.k_max_fp},
          {"quad_tol", n.quad_tol}, {"workers", n.workers}};
}

}  // namespace parasim
