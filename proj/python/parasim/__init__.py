"""Branching cell population with parasite jump-diffusion dynamics.

Models and numerics are plain dicts using the JSON schema of docs/model-schema.md.
"""

import json as _json
import os as _os

from . import _core
from ._core import SpecError, birth_death_law, birth_death_pmf, l_schedule, preset_names, sample_N

__version__ = _core.__version__


def _dump(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def preset(name):
    return _json.loads(_core.preset_json(name))


def normalize_model(model):
    return _json.loads(_core.normalize_model(_dump(model)))


def validate_model(model):
    return _core.validate_model(_dump(model))


def rho(x, model):
    return _core.rho(x, _dump(model))


def I_a(a, x, pi, quad_tol=1e-10):
    return _core.I_a(a, x, _dump(pi), quad_tol)


def D(a, x, model, quad_tol=1e-10):
    return _core.D(a, x, _dump(model), quad_tol)


def G_a(a, x, r_arg, model, quad_tol=1e-10):
    return _core.G_a(a, x, r_arg, _dump(model), quad_tol)


def in_A(a, kappa):
    return _core.in_A(a, _dump(kappa))


def criteria_report(model, a, eta=0.5, lo=1.0, hi=1e12, n=49, r_arg=0.0, scan=False):
    return _json.loads(_core.criteria_report(_dump(model), a, eta, lo, hi, n, r_arg, scan))


def simulate_flow(model, x0, T, numerics=None):
    return _core.simulate_flow(_dump(model), x0, T, _dump(numerics or {}))


def solve_mean_field(model, T, K=40, numerics=None):
    return _core.solve_mean_field(_dump(model), T, K, _dump(numerics or {}))


def simulate_population(model, T, numerics=None, replicate=0):
    return _core.simulate_population(_dump(model), T, _dump(numerics or {}), replicate)


def many_to_one_check(kind, t, model, numerics=None, K=0.0):
    return _core.many_to_one_check(kind, K, t, _dump(model), _dump(numerics or {}))


def explosion_probability(model, T, numerics=None):
    return _core.explosion_probability(_dump(model), T, _dump(numerics or {}))


def run_experiment(config, out_dir, workers=0):
    if isinstance(config, _os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        with open(config) as f:
            config = f.read()
    return _json.loads(_core.run_experiment(_dump(config), str(out_dir), workers))


def replay(manifest, out_dir, workers=0):
    return _core.replay(str(manifest), str(out_dir), workers)
