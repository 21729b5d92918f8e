"""Problem description for the 1D transient slab transport equation.

Holds the slab mesh, the piecewise-constant material layout, the angular
quadrature and the full transport problem (speed, time grid, boundary,
initial and source data, source-iteration controls). All objects are frozen
once built, so they can be handed to worker processes without copying
concerns.

Callables stored on a :class:`TransportProblem` must broadcast over numpy
arrays:

- ``inflow_left(t, mu)`` and ``inflow_right(t, mu)`` take a scalar time and
  an array of direction cosines;
- ``initial(x, mu)`` takes broadcastable node and direction arrays;
- ``source(t, x, mu)`` takes a scalar time plus broadcastable arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError

# Relative slack when matching a breakpoint to a mesh node.
_NODE_MATCH_RTOL = 1e-10


@dataclass(frozen=True)
class SlabGeometry:
    """Uniform mesh on ``[a, b]`` with ``n_x`` cells and ``n_x + 1`` nodes."""

    a: float
    b: float
    n_x: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise ConfigurationError(f"need finite a < b, got a={self.a}, b={self.b}")
        if int(self.n_x) != self.n_x or self.n_x < 2:
            raise ConfigurationError(f"n_x must be an integer >= 2, got {self.n_x}")

    @property
    def h_x(self) -> float:
        return (self.b - self.a) / self.n_x

    @property
    def nodes(self) -> np.ndarray:
        return self.a + np.arange(self.n_x + 1) * self.h_x

    def node(self, i: int) -> float:
        return self.a + i * self.h_x

    def node_index(self, x: float) -> int | None:
        """Index of the node located at ``x``, or ``None`` if ``x`` is off-mesh."""
        k = round((x - self.a) / self.h_x)
        if 0 <= k <= self.n_x and abs(self.node(k) - x) <= _NODE_MATCH_RTOL * (self.b - self.a):
            return int(k)
        return None


@dataclass(frozen=True)
class MaterialField:
    """Piecewise-constant absorption and scattering coefficients.

    ``breakpoints`` run from ``a`` to ``b``; region ``r`` covers
    ``(breakpoints[r], breakpoints[r + 1])`` and carries ``kappa[r]`` and
    ``sigma_s[r]``.
    """

    breakpoints: tuple[float, ...]
    kappa: tuple[float, ...]
    sigma_s: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(v) for v in self.breakpoints))
        object.__setattr__(self, "kappa", tuple(float(v) for v in self.kappa))
        object.__setattr__(self, "sigma_s", tuple(float(v) for v in self.sigma_s))
        n_regions = len(self.breakpoints) - 1
        if n_regions < 1:
            raise ConfigurationError("material needs at least two breakpoints")
        if len(self.kappa) != n_regions or len(self.sigma_s) != n_regions:
            raise ConfigurationError(
                f"{n_regions} regions but {len(self.kappa)} kappa and "
                f"{len(self.sigma_s)} sigma_s values"
            )
        if any(hi <= lo for lo, hi in zip(self.breakpoints, self.breakpoints[1:])):
            raise ConfigurationError(f"breakpoints must be strictly increasing: {self.breakpoints}")
        values = self.kappa + self.sigma_s
        if not all(math.isfinite(v) and v >= 0.0 for v in values):
            raise ConfigurationError("kappa and sigma_s must be finite and >= 0")

    @classmethod
    def homogeneous(cls, a: float, b: float, kappa: float, sigma_s: float) -> "MaterialField":
        return cls((a, b), (kappa,), (sigma_s,))

    @property
    def n_regions(self) -> int:
        return len(self.kappa)

    def region_of(self, x: float) -> int:
        """Region index containing ``x``; a breakpoint belongs to the region on its left."""
        if x < self.breakpoints[0] or x > self.breakpoints[-1]:
            raise ValueError(f"x={x} outside [{self.breakpoints[0]}, {self.breakpoints[-1]}]")
        r = int(np.searchsorted(self.breakpoints, x, side="left")) - 1
        return min(max(r, 0), self.n_regions - 1)

    def sigma_t(self, region: int) -> float:
        return self.kappa[region] + self.sigma_s[region]

    def check_against(self, geometry: SlabGeometry) -> None:
        """Raise unless the material spans the mesh and every breakpoint sits on a node."""
        span = geometry.b - geometry.a
        if (abs(self.breakpoints[0] - geometry.a) > _NODE_MATCH_RTOL * span
                or abs(self.breakpoints[-1] - geometry.b) > _NODE_MATCH_RTOL * span):
            raise ConfigurationError(
                f"material spans [{self.breakpoints[0]}, {self.breakpoints[-1]}], "
                f"mesh spans [{geometry.a}, {geometry.b}]"
            )
        for x in self.breakpoints[1:-1]:
            if geometry.node_index(x) is None:
                raise ConfigurationError(
                    f"breakpoint {x} is not a mesh node (h_x={geometry.h_x})"
                )

    def cell_regions(self, geometry: SlabGeometry) -> np.ndarray:
        """Region index of each cell, decided by the cell midpoint."""
        mids = geometry.a + (np.arange(geometry.n_x) + 0.5) * geometry.h_x
        return np.array([self.region_of(x) for x in mids], dtype=int)

    def cell_coefficients(self, geometry: SlabGeometry):
        """Per-cell ``(kappa, sigma_s, sigma_t)`` arrays of length ``n_x``."""
        regions = self.cell_regions(geometry)
        kappa = np.asarray(self.kappa)[regions]
        sigma_s = np.asarray(self.sigma_s)[regions]
        return kappa, sigma_s, kappa + sigma_s


def sigma_t_on_cell(material: MaterialField, i: int, geometry: SlabGeometry) -> float:
    """Total coefficient on cell ``(x_i, x_{i+1})``."""
    if not 0 <= i < geometry.n_x:
        raise IndexError(f"cell index {i} outside 0..{geometry.n_x - 1}")
    mid = geometry.a + (i + 0.5) * geometry.h_x
    return material.sigma_t(material.region_of(mid))


@dataclass(frozen=True)
class AngularQuadrature:
    """Symmetric quadrature on (-1, 1) with nodes sorted ascending."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_q(self) -> int:
        return len(self.nodes)

    @property
    def positive(self) -> np.ndarray:
        return self.nodes > 0


def _legendre_and_derivative(n: int, x: np.ndarray):
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def build_gauss_legendre(n_q: int) -> AngularQuadrature:
    """Gauss-Legendre rule with ``n_q`` points on [-1, 1].

    Roots of P_n are found by Newton iteration from the Chebyshev-angle
    guesses ``cos(pi (i - 1/4) / (n + 1/2))``; only the positive half is
    solved and then mirrored so the rule is exactly symmetric.
    """
    if isinstance(n_q, bool) or int(n_q) != n_q or n_q < 2 or n_q % 2:
        raise ValueError(f"n_q must be an even integer >= 2, got {n_q!r}")
    n = int(n_q)
    i = np.arange(1, n // 2 + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    # One more evaluation at the converged roots for the weights.
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # x is descending positive; mirror to get ascending over (-1, 1).
    nodes = np.concatenate([-x, x[::-1]])
    weights = np.concatenate([w, w[::-1]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return AngularQuadrature(nodes, weights)


def scalar_flux_at_nodes(intensity: np.ndarray, quadrature: AngularQuadrature) -> np.ndarray:
    """Half-range-weighted angular average ``0.5 * sum_j I[i, j] w_j``."""
    intensity = np.asarray(intensity, dtype=float)
    if intensity.ndim != 2 or intensity.shape[1] != quadrature.n_q:
        raise ValueError(
            f"intensity shape {intensity.shape} does not match n_q={quadrature.n_q}"
        )
    return 0.5 * intensity @ quadrature.weights


def _zero(*args):
    return 0.0


@dataclass(frozen=True)
class TransportProblem:
    geometry: SlabGeometry
    material: MaterialField
    t_f: float
    n_t: int
    c: float = 1.0
    inflow_left: Callable = _zero
    inflow_right: Callable = _zero
    initial: Callable = _zero
    source: Callable = _zero
    si_tol: float = 1.49e-8
    si_max_iter: int = 1000
    # Free-form labels kept for provenance (preset names, kappa values).
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigurationError(f"particle speed c must be > 0, got {self.c}")
        if not (self.t_f > 0 and math.isfinite(self.t_f)):
            raise ConfigurationError(f"t_f must be > 0, got {self.t_f}")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ConfigurationError(f"n_t must be a positive integer, got {self.n_t}")
        if not self.si_tol > 0:
            raise ConfigurationError(f"si_tol must be > 0, got {self.si_tol}")
        if int(self.si_max_iter) != self.si_max_iter or self.si_max_iter < 1:
            raise ConfigurationError(f"si_max_iter must be a positive integer, got {self.si_max_iter}")
        self.material.check_against(self.geometry)

    @property
    def h_t(self) -> float:
        return self.t_f / self.n_t

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.h_t

    def time_index(self, t: float, atol: float = 1e-12) -> int:
        """Time level ``k`` with ``k * h_t == t``; raises for off-grid times."""
        k = round(t / self.h_t)
        if not 0 <= k <= self.n_t or abs(k * self.h_t - t) > atol * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the grid (h_t={self.h_t}, t_f={self.t_f})")
        return int(k)


def sample_on_grid(func: Callable, *args, shape: Sequence[int]) -> np.ndarray:
    """Evaluate a broadcasting callable and expand the result to ``shape``."""
    out = np.broadcast_to(np.asarray(func(*args), dtype=float), tuple(shape))
    return np.array(out)
