"""JSON run configuration: defaults, merging, and problem construction.

A single file may carry any of these sections; missing keys fall back to
:data:`DEFAULTS`, which hold the reference settings::

    {
      "geometry": {"a": 0.0, "b": 1.0, "n_x": 100},
      "material": {"breakpoints": [0.0, 1.0], "kappa": [0.5], "sigma_s": [0.5]},
      "time": {"t_f": 3.0, "n_t": 300},
      "speed_c": 1.0,
      "si": {"tol": 1.49e-8, "max_iter": 1000},
      "quadrature": {"n_q": 100},
      "boundary": {"left": "unit", "right": "zero"},
      "initial": "left-node-forward",
      "source": "zero",
      "detector_times": [3.0],
      "dataset": {...SolverConfig fields...},
      "test_sets": {"homogeneous": {"n": 32, "seed": 1}, ...},
      "training": {"homogeneous": {...}, "heterogeneous": {...}}
    }
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .dataset import SolverConfig
from .errors import ConfigurationError
from .model import MaterialField, SlabGeometry, TransportProblem
from .verification import manufactured_intensity, manufactured_source

DEFAULTS = {
    "geometry": {"a": 0.0, "b": 1.0, "n_x": 100},
    "material": {"breakpoints": [0.0, 1.0], "kappa": [0.5], "sigma_s": [0.5]},
    "time": {"t_f": 3.0, "n_t": 300},
    "speed_c": 1.0,
    "si": {"tol": 1.49e-8, "max_iter": 1000},
    "quadrature": {"n_q": 100},
    "boundary": {"left": "unit", "right": "zero"},
    "initial": "left-node-forward",
    "source": "zero",
    "detector_times": [3.0],
    "dataset": {
        "n_q": 100, "n_x": 100, "h_t": 0.01, "t_f": 3.0, "sigma_t": 1.0,
        "c": 1.0, "si_tol": 1.49e-8, "si_max_iter": 1000,
    },
    "test_sets": {
        "homogeneous": {"n": 32, "seed": 1},
        "heterogeneous": {"n": 64, "seed": 2},
    },
    "training": {
        "homogeneous": {
            "arch": [2, 25, 25, 25, 1], "optimizer": "adam", "learning_rate": 1e-3,
            "max_epochs": 30000, "loss_target": 1e-6, "seed": 0, "standardize": False,
        },
        "heterogeneous": {
            "arch": [4, 25, 25, 25, 25, 2], "optimizer": "adam", "learning_rate": 1e-3,
            "max_epochs": 15000, "loss_target": 1e-5, "seed": 0, "standardize": False,
        },
    },
}

BOUNDARY_PRESETS = ("unit", "zero", "manufactured")
INITIAL_PRESETS = ("zero", "left-node-forward", "manufactured")
SOURCE_PRESETS = ("zero", "manufactured")


def merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; values in ``override`` win."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    return merge(DEFAULTS, doc)


def solver_config(cfg: dict) -> SolverConfig:
    try:
        sc = SolverConfig(**cfg["dataset"])
    except TypeError as exc:
        raise ConfigurationError(f"dataset section: {exc}") from exc
    sc.n_t  # validates t_f against h_t
    return sc


def _boundary(name, x_edge, kappa, sigma_t):
    if name == "unit":
        return lambda t, mu: 1.0
    if name == "zero":
        return lambda t, mu: 0.0
    if name == "manufactured":
        return lambda t, mu: manufactured_intensity(t, x_edge, mu, sigma_t)
    raise ConfigurationError(f"unknown boundary preset {name!r}; choose from {BOUNDARY_PRESETS}")


def problem_from_config(cfg: dict) -> TransportProblem:
    """Build a :class:`TransportProblem` from a merged configuration dict."""
    try:
        g, m, tm, si = cfg["geometry"], cfg["material"], cfg["time"], cfg["si"]
        geometry = SlabGeometry(float(g["a"]), float(g["b"]), int(g["n_x"]))
        material = MaterialField(m["breakpoints"], m["kappa"], m["sigma_s"])
        bnd = cfg["boundary"]
        initial, source = cfg["initial"], cfg["source"]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"incomplete problem configuration: {exc}") from exc
    manufactured = "manufactured" in (bnd["left"], bnd["right"], initial, source)
    kappa = sigma_t = None
    if manufactured:
        if material.n_regions != 1:
            raise ConfigurationError("manufactured presets need a homogeneous material")
        kappa, sigma_t = material.kappa[0], material.sigma_t(0)
    a = geometry.a
    if initial == "zero":
        init = lambda x, mu: 0.0  # noqa: E731
    elif initial == "left-node-forward":
        init = lambda x, mu: np.where((x == a) & (mu > 0), 1.0, 0.0)  # noqa: E731
    elif initial == "manufactured":
        init = lambda x, mu: manufactured_intensity(0.0, x, mu, sigma_t)  # noqa: E731
    else:
        raise ConfigurationError(f"unknown initial preset {initial!r}; choose from {INITIAL_PRESETS}")
    if source == "zero":
        src = lambda t, x, mu: 0.0  # noqa: E731
    elif source == "manufactured":
        src = lambda t, x, mu: manufactured_source(t, x, mu, kappa, sigma_t)  # noqa: E731
    else:
        raise ConfigurationError(f"unknown source preset {source!r}; choose from {SOURCE_PRESETS}")
    return TransportProblem(
        geometry=geometry,
        material=material,
        t_f=float(tm["t_f"]),
        n_t=int(tm["n_t"]),
        c=float(cfg["speed_c"]),
        inflow_left=_boundary(bnd["left"], geometry.a, kappa, sigma_t),
        inflow_right=_boundary(bnd["right"], geometry.b, kappa, sigma_t),
        initial=init,
        source=src,
        si_tol=float(si["tol"]),
        si_max_iter=int(si["max_iter"]),
        meta={"boundary": dict(bnd), "initial": initial, "source": source},
    )
