#pragma once

// Lock-step simulation of one or more spinal lanes sharing every driver.
// A single lane is an ordinary spine; two lanes form a coupling.
//
// Divisions and lysis proposals are homogeneous Poisson streams (rates 2b
// and sup r), so their times never depend on the state. Reservoir doses and
// parasite jumps share a time-changed unit exponential clock running at the
// dominating rate of all lanes; each proposal carries a uniform mark that a
// lane accepts when it falls below its own rate at the left end of the step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "parasim/model.hpp"
#include "parasim/rng.hpp"
#include "parasim/sde.hpp"
#include "parasim/spinal.hpp"

namespace parasim::detail {

struct SpineDrivers {
  DriverStream flow;
  DriverStream division;
  DriverStream lysis;
  DriverStream state;

  explicit SpineDrivers(const StreamId& id)
      : flow(id.master_seed, id.purpose + "/flow", id.replicate),
        division(id.master_seed, id.purpose + "/division", id.replicate),
        lysis(id.master_seed, id.purpose + "/lysis", id.replicate),
        state(id.master_seed, id.purpose + "/state", id.replicate) {}
};

struct Lane {
  Lane(const ModelSpec& m, const SpinalVariant& v, double x0, double x_explode)
      : model(&m), kernel(m, x_explode), variant(v), x(x0 >= x_explode ? kInfinity : x0), sup(x) {
    exploded = std::isinf(x);
    if (exploded) explosion_time = 0.0;
    r_zero = traits(m.r).identically_zero;
    switch (v.tag) {
      case VariantTag::Y: lysis_cap = r_zero ? 0.0 : upper_bound(m.r, 0.0, kInfinity); break;
      case VariantTag::Ybar: lysis_cap = eval(m.r, v.ybar); break;
      default: lysis_cap = 0.0; break;
    }
    reservoir_off = v.tag == VariantTag::Ytilde ||
                    (v.tag != VariantTag::Ytildetilde && traits(m.lambda).identically_zero);
  }

  double reservoir_rate(double load) const {
    if (reservoir_off) return 0.0;
    if (variant.tag == VariantTag::Ytildetilde) return variant.lambda_floor;
    return eval(model->lambda, load);
  }

  double lysis_rate(double t, const MeanFieldCurve* mf) const {
    switch (variant.tag) {
      case VariantTag::Y: return (r_zero || !mf) ? 0.0 : eval(model->r, mf->at(t));
      case VariantTag::Ybar: return lysis_cap;
      default: return 0.0;
    }
  }

  const ModelSpec* model;
  FlowKernel kernel;
  SpinalVariant variant;
  double x;
  double sup;
  bool exploded = false;
  double explosion_time = 0.0;
  bool r_zero = true;
  bool reservoir_off = true;
  double lysis_cap = 0.0;
  FlowDiagnostics diagnostics;
};

struct ObserverBase {
  void on_flow(std::size_t, double /*t0*/, double /*x0*/, double /*t1*/, double /*x1*/) {}
  void on_event(std::size_t, SpinalEventKind, double /*t*/, double /*magnitude*/,
                double /*before*/, double /*after*/) {}
  void on_stop(std::size_t /*k*/, double /*t*/) {}
  bool finished() const { return false; }
};

inline void add_load(Lane& lane, double amount, double t) {
  lane.x += amount;
  if (lane.x >= lane.kernel.x_explode()) {
    lane.x = kInfinity;
    lane.exploded = true;
    lane.explosion_time = t;
  }
  lane.sup = std::max(lane.sup, lane.x);
}

template <class Observer>
void run_spine(std::vector<Lane>& lanes, double T, const MeanFieldCurve* mf, double dt,
               const std::vector<double>& stops, SpineDrivers& drv, Observer& obs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const ModelSpec& m0 = *lanes.front().model;
  const double div_rate = 2.0 * m0.b;
  const std::size_t n = lanes.size();

  double lysis_cap = 0.0;
  bool all_null = true, any_diffusive = false, any_state = false;
  for (const auto& l : lanes) {
    lysis_cap = std::max(lysis_cap, l.lysis_cap);
    all_null = all_null && l.kernel.null_dynamics();
    any_diffusive = any_diffusive || l.kernel.has_diffusion();
    any_state = any_state || !l.reservoir_off || l.kernel.has_jumps();
  }

  double t = 0.0;
  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= 0.0) obs.on_stop(next_stop++, 0.0);

  double t_div = div_rate > 0 ? drv.division.exponential() / div_rate : inf;
  double t_lys = lysis_cap > 0 ? drv.lysis.exponential() / lysis_cap : inf;
  double clock = any_state ? drv.state.exponential() : inf;

  std::vector<double> lam(n, 0.0), jr(n, 0.0);
  enum class Bind { flow, division, lysis, state, stop, horizon };

  while (t < T && !obs.finished()) {
    bool any_alive = false;
    double lam_max = 0.0, jr_max = 0.0, h = inf;
    for (std::size_t i = 0; i < n; ++i) {
      const Lane& l = lanes[i];
      if (l.exploded) {
        lam[i] = jr[i] = 0.0;
        continue;
      }
      any_alive = true;
      lam[i] = l.reservoir_rate(l.x);
      jr[i] = l.kernel.jump_rate(l.x);
      lam_max = std::max(lam_max, lam[i]);
      jr_max = std::max(jr_max, jr[i]);
      if (!all_null) h = std::min(h, l.kernel.adaptive_step(l.x, dt));
    }
    if (!any_alive) break;
    const double R = lam_max + jr_max;

    Bind bind = Bind::horizon;
    double t_next = T;
    auto consider = [&](double cand, Bind b) {
      if (cand < t_next) {
        t_next = cand;
        bind = b;
      }
    };
    if (next_stop < stops.size()) consider(stops[next_stop], Bind::stop);
    consider(t_div, Bind::division);
    consider(t_lys, Bind::lysis);
    if (R > 0) consider(t + clock / R, Bind::state);
    consider(t + h, Bind::flow);
    const double step = t_next - t;

    if (all_null && step > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!lanes[i].exploded) obs.on_flow(i, t, lanes[i].x, t_next, lanes[i].x);
      }
    } else if (step > 0) {
      const double xi = any_diffusive ? drv.flow.normal() : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        Lane& l = lanes[i];
        if (l.exploded) continue;
        const double before = l.x;
        l.x = l.kernel.step_continuous(before, step, xi, &l.diagnostics);
        if (std::isinf(l.x)) {
          l.exploded = true;
          l.explosion_time = t_next;
        }
        l.sup = std::max(l.sup, l.x);
        obs.on_flow(i, t, before, t_next, l.x);
      }
    }
    if (R > 0) clock -= R * step;
    t = t_next;

    switch (bind) {
      case Bind::division: {
        const double theta = sample_theta(m0.kappa, drv.division);
        for (std::size_t i = 0; i < n; ++i) {
          Lane& l = lanes[i];
          if (l.exploded) continue;
          const double before = l.x;
          l.x *= theta;
          obs.on_event(i, SpinalEventKind::division, t, theta, before, l.x);
        }
        t_div = t + drv.division.exponential() / div_rate;
        break;
      }
      case Bind::lysis: {
        const double u = drv.lysis.uniform() * lysis_cap;
        const double dose = sample(m0.doseP, drv.lysis);
        for (std::size_t i = 0; i < n; ++i) {
          Lane& l = lanes[i];
          if (l.exploded || !(u < l.lysis_rate(t, mf))) continue;
          const double before = l.x;
          add_load(l, dose, t);
          obs.on_event(i, SpinalEventKind::lysis_dose, t, dose, before, l.x);
        }
        t_lys = t + drv.lysis.exponential() / lysis_cap;
        break;
      }
      case Bind::state: {
        const double u = drv.state.uniform() * R;
        if (u < lam_max) {
          const double dose = sample(m0.doseI, drv.state);
          for (std::size_t i = 0; i < n; ++i) {
            Lane& l = lanes[i];
            if (l.exploded || !(u < lam[i])) continue;
            const double before = l.x;
            add_load(l, dose, t);
            obs.on_event(i, SpinalEventKind::reservoir_dose, t, dose, before, l.x);
          }
        } else {
          const double v = u - lam_max;
          const double z = sample(m0.pi, drv.state);
          for (std::size_t i = 0; i < n; ++i) {
            Lane& l = lanes[i];
            if (l.exploded || !(v < jr[i])) continue;
            const double before = l.x;
            add_load(l, z, t);
            obs.on_event(i, SpinalEventKind::parasite_jump, t, z, before, l.x);
          }
        }
        clock = drv.state.exponential();
        break;
      }
      default:
        break;
    }
    while (next_stop < stops.size() && stops[next_stop] <= t) obs.on_stop(next_stop++, t);
  }
  while (next_stop < stops.size() && stops[next_stop] <= T) {
    obs.on_stop(next_stop, stops[next_stop]);
    ++next_stop;
  }
}

}  // namespace parasim::detail
