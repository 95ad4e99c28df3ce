#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "parasim/criteria.hpp"
#include "parasim/harness.hpp"
#include "parasim/model_json.hpp"
#include "parasim/population.hpp"
#include "parasim/presets.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

parasim::ModelSpec model_of(const std::string& text) { return parasim::model_from_json(json::parse(text)); }
parasim::NumericsSpec numerics_of(const std::string& text) {
  return parasim::numerics_from_json(text.empty() ? json::object() : json::parse(text));
}

py::dict estimate(const parasim::Estimate& e) {
  py::dict d;
  d["mean"] = e.mean;
  d["se"] = e.se;
  d["n"] = e.n;
  return d;
}

std::optional<parasim::MeanFieldCurve> curve_for(const parasim::ModelSpec& m, double T,
                                                 const parasim::NumericsSpec& n) {
  if (parasim::traits(m.r).identically_zero) return std::nullopt;
  return parasim::solve_mean_field(m, m.x0, T, parasim::uniform_grid(T, 40), n);
}

parasim::Functional functional_of(const std::string& kind, double K) {
  if (kind == "one") return parasim::Functional::one();
  if (kind == "identity") return parasim::Functional::identity();
  if (kind == "indicator-ge") return parasim::Functional::indicator_ge(K);
  if (kind == "sup-le") return parasim::Functional::sup_le(K);
  throw parasim::SpecError("unknown functional '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core: models, engines, criteria and the experiment harness";
  m.attr("__version__") = parasim::kToolVersion;

  py::register_exception<parasim::SpecError>(m, "SpecError", PyExc_ValueError);

  m.def("preset_names", &parasim::presets::names);
  m.def("preset_json", [](const std::string& name) {
    auto p = parasim::presets::by_name(name);
    if (!p) throw parasim::SpecError("unknown preset '" + name + "'");
    return parasim::to_json(*p).dump();
  });
  m.def("normalize_model", [](const std::string& text) { return parasim::to_json(model_of(text)).dump(); });

  m.def("validate_model", [](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& c : parasim::validate_model(model_of(text)).clauses) {
      for (const auto& v : c.violations) out.push_back(std::string(parasim::to_string(c.clause)) + ": " + v);
    }
    return out;
  });

  m.def("birth_death_law", [](double b, double d, double t) {
    const auto law = parasim::birth_death_law(b, d, t);
    return py::make_tuple(law.alpha, law.beta);
  });
  m.def("birth_death_pmf", &parasim::birth_death_pmf, py::arg("b"), py::arg("d"), py::arg("t"), py::arg("n"));
  m.def(
      "sample_N",
      [](double b, double d, double t, std::uint64_t seed, std::size_t count) {
        std::vector<std::uint64_t> out(count);
        for (std::size_t i = 0; i < count; ++i) {
          parasim::DriverStream s(seed, "sample-N", i);
          out[i] = parasim::sample_N(b, d, t, s);
        }
        return out;
      },
      py::arg("b"), py::arg("d"), py::arg("t"), py::arg("seed"), py::arg("count"));

  m.def("rho", [](double x, const std::string& model) { return parasim::rho(x, model_of(model)); });
  m.def("I_a", [](double a, double x, const std::string& pi, double tol) {
    return parasim::I_a(a, x, parasim::jump_law_from_json(json::parse(pi), parasim::JumpRole::parasite_jump_pi, "pi"), tol);
  }, py::arg("a"), py::arg("x"), py::arg("pi"), py::arg("quad_tol") = 1e-10);
  m.def("D", [](double a, double x, const std::string& model, double tol) {
    return parasim::D(a, x, model_of(model), tol);
  }, py::arg("a"), py::arg("x"), py::arg("model"), py::arg("quad_tol") = 1e-10);
  m.def("G_a", [](double a, double x, double r_arg, const std::string& model, double tol) {
    return parasim::G_a(a, x, r_arg, model_of(model), tol);
  }, py::arg("a"), py::arg("x"), py::arg("r_arg"), py::arg("model"), py::arg("quad_tol") = 1e-10);
  m.def("in_A", [](double a, const std::string& kappa) {
    return parasim::in_A(a, parasim::fragmentation_from_json(json::parse(kappa), "kappa"));
  });
  m.def("criteria_report", [](const std::string& model, double a, double eta, double lo, double hi, std::size_t n,
                              double r_arg, bool scan) {
    const auto rep = parasim::criteria_report(model_of(model), a, eta, parasim::log_grid(lo, hi, n), r_arg, 1e-10, scan);
    return parasim::to_json(rep).dump();
  });
  m.def("l_schedule", [](double b, double delta, double eta, double tol) {
    const auto s = parasim::l_schedule(b, delta, eta, tol);
    py::dict d;
    d["value"] = s.value;
    d["lower"] = s.lower;
    d["upper"] = s.upper;
    d["terms"] = s.terms;
    return d;
  });

  m.def("simulate_flow", [](const std::string& model, double x0, double T, const std::string& numerics) {
    const auto mod = model_of(model);
    const auto num = numerics_of(numerics);
    parasim::DriverStream s(num.master_seed, "flow", 0);
    const auto path = parasim::simulate_flow(x0, 0.0, T, mod, num, s);
    std::vector<double> t, x;
    for (const auto& p : path.points) {
      t.push_back(p.t);
      x.push_back(p.x);
    }
    return py::make_tuple(t, x, path.exploded);
  });
  m.def("solve_mean_field", [](const std::string& model, double T, std::size_t K, const std::string& numerics) {
    const auto mod = model_of(model);
    const auto c = parasim::solve_mean_field(mod, mod.x0, T, parasim::uniform_grid(T, K), numerics_of(numerics));
    py::dict d;
    d["grid"] = c.grid;
    d["values"] = c.values;
    d["converged"] = c.converged;
    d["iterations"] = c.iterations;
    d["residual"] = c.residual;
    return d;
  });
  m.def("simulate_population", [](const std::string& model, double T, const std::string& numerics, std::uint64_t replicate) {
    const auto mod = model_of(model);
    const auto num = numerics_of(numerics);
    const auto mf = curve_for(mod, T, num);
    const auto pop = parasim::simulate_population(mod, mod.x0, T, mf ? &*mf : nullptr, num,
                                                  parasim::StreamId{num.master_seed, "python-population", replicate});
    py::list cells;
    for (const auto& c : pop.living) cells.append(py::make_tuple(c.label, c.x, c.exploded));
    return py::make_tuple(cells, pop.cap_hit);
  });
  m.def("many_to_one_check", [](const std::string& kind, double K, double t, const std::string& model,
                                const std::string& numerics) {
    const auto mod = model_of(model);
    const auto num = numerics_of(numerics);
    const auto mf = curve_for(mod, t, num);
    const auto r = parasim::many_to_one_check(functional_of(kind, K), t, mod, mf ? &*mf : nullptr, num, num);
    py::dict d;
    d["population"] = estimate(r.lhs);
    d["spine"] = estimate(r.rhs);
    d["z"] = r.z;
    d["capped"] = r.capped;
    return d;
  });
  m.def("explosion_probability", [](const std::string& model, double T, const std::string& numerics) {
    const auto mod = model_of(model);
    return estimate(parasim::explosion_probability(mod, mod.x0, T, nullptr, numerics_of(numerics)));
  });

  m.def("run_experiment", [](const std::string& config, const std::string& out_dir, unsigned workers) {
    parasim::RunOptions o;
    o.out_dir = out_dir;
    if (workers > 0) o.workers = workers;
    return parasim::run_experiment(parasim::parse_config(json::parse(config)), o).manifest.dump();
  }, py::arg("config"), py::arg("out_dir"), py::arg("workers") = 0);
  m.def("replay", [](const std::string& manifest, const std::string& out_dir, unsigned workers) {
    parasim::RunOptions o;
    o.out_dir = out_dir;
    if (workers > 0) o.workers = workers;
    const auto r = parasim::replay(manifest, o);
    return py::make_tuple(r.identical, r.mismatched);
  }, py::arg("manifest"), py::arg("out_dir"), py::arg("workers") = 0);
}
