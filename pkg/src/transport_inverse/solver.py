"""Direct solver: implicit Euler in time, source iteration, characteristic sweeps.

Each time step solves, per direction, the steady characteristic equation

    mu dI/dx + (sigma_t + 1/(c h_t)) I = sigma_s Psi_lagged + q + I_prev / (c h_t)

exactly along every mesh cell, with the right-hand side interpolated linearly
between the two cell nodes. The scattering term is lagged and iterated to a
fixed point (source iteration) before advancing to the next level.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, NumericError
from .model import (
    AngularQuadrature,
    TransportProblem,
    sample_on_grid,
    scalar_flux_at_nodes,
)

log = logging.getLogger(__name__)

# Below this optical depth the closed-form weights lose digits to cancellation
# and a truncated series is used instead.
_SERIES_TAU = 1e-3


def _segment_weights(tau):
    """Attenuation and source weights of one characteristic segment.

    Returns ``(e^{-tau}, w_start, w_end)`` such that, for a source varying
    linearly from ``S_start`` to ``S_end`` over a segment of length ``ds``,

        I_out = e^{-tau} I_in + ds * (w_start S_start + w_end S_end).
    """
    tau = np.asarray(tau, dtype=float)
    small = tau < _SERIES_TAU
    t = np.where(small, 1.0, tau)
    att = np.exp(-tau)
    em1 = -np.expm1(-t)  # 1 - e^{-t}
    w_start = (em1 - t * np.exp(-t)) / (t * t)
    w_end = (t - em1) / (t * t)
    ts = np.where(small, tau, 0.0)
    # Series through tau^4; truncation error < tau^5 / 144.
    w_start_s = 0.5 - ts / 3 + ts**2 / 8 - ts**3 / 30 + ts**4 / 144
    w_end_s = 0.5 - ts / 6 + ts**2 / 24 - ts**3 / 120 + ts**4 / 720
    return att, np.where(small, w_start_s, w_start), np.where(small, w_end_s, w_end)


def segment_update(I_in, delta_s, sigma_tilde, S_start, S_end):
    """Intensity leaving a segment of length ``delta_s``.

    Integrates ``dI/ds + sigma_tilde I = S(s)`` exactly for ``S`` linear in
    ``s`` between ``S_start`` (upstream) and ``S_end`` (downstream).
    Broadcasts over array arguments.
    """
    args = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                 for v in (I_in, delta_s, sigma_tilde, S_start, S_end)))
    if not all(np.all(np.isfinite(v)) for v in args):
        raise NumericError("segment_update received non-finite input")
    I_in, delta_s, sigma_tilde, S_start, S_end = args
    if np.any(delta_s <= 0) or np.any(sigma_tilde < 0):
        raise ValueError("need delta_s > 0 and sigma_tilde >= 0")
    att, w0, w1 = _segment_weights(sigma_tilde * delta_s)
    out = att * I_in + delta_s * (w0 * S_start + w1 * S_end)
    return out.item() if out.ndim == 0 else out


@dataclass
class SweepState:
    """Iterate carried through one source-iteration pass."""

    intensity_prev_time: np.ndarray
    psi_lagged: np.ndarray
    intensity_current: np.ndarray | None = None
    time_level: int = 0
    si_index: int = 0


@dataclass
class DetectorReadout:
    times: list[float]
    psi_left: list[float]
    psi_right: list[float]

    def as_vector(self) -> list[float]:
        """Left detectors by ascending time, then right detectors by ascending time."""
        order = np.argsort(self.times, kind="stable")
        return [self.psi_left[k] for k in order] + [self.psi_right[k] for k in order]


@dataclass
class SpaceTimeSolution:
    times: np.ndarray
    x: np.ndarray
    psi: np.ndarray  # (n_t + 1, n_x + 1)
    intensity_final: np.ndarray  # (n_x + 1, n_q)
    si_iterations: list[int] = field(default_factory=list)

    def write_history(self, path) -> None:
        """Full scalar-flux history as ``t,x,psi`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "psi"])
            for k, t in enumerate(self.times):
                for i, x in enumerate(self.x):
                    w.writerow([f"{t:.17g}", f"{x:.17g}", f"{self.psi[k, i]:.17g}"])

    def write_trace(self, path) -> None:
        """Per-step trace as ``k,t,si_iters,psi_left,psi_right`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t", "si_iters", "psi_left", "psi_right"])
            for k, t in enumerate(self.times):
                iters = self.si_iterations[k - 1] if k > 0 else 0
                w.writerow([k, f"{t:.17g}", iters,
                            f"{self.psi[k, 0]:.17g}", f"{self.psi[k, -1]:.17g}"])


class MocSolver:
    """Precomputes the per-cell, per-direction segment coefficients of a problem.

    The optical depths do not change between time steps, so the exponentials
    are evaluated once. Directions are stored in upstream order: column ``j``
    of every ``(n_x [+1], n_q)`` array is indexed by distance from that
    direction's inflow boundary.
    """

    def __init__(self, problem: TransportProblem, quadrature: AngularQuadrature):
        self.problem = problem
        self.quadrature = quadrature
        geom = problem.geometry
        mu = np.asarray(quadrature.nodes)
        self.mu = mu
        self.pos = mu > 0
        self.neg = ~self.pos
        self.x = geom.nodes
        _, sigma_s, sigma_t = problem.material.cell_coefficients(geom)
        self.sigma_s_cell = sigma_s
        self.inv_cht = 1.0 / (problem.c * problem.h_t)
        sigma_tilde = sigma_t + self.inv_cht

        ds = geom.h_x / np.abs(mu)  # path length across one cell, per direction
        tau = sigma_tilde[:, None] * ds[None, :]
        att, w0, w1 = _segment_weights(tau)
        # Reorder cells so that row k is the k-th cell met downstream.
        self.att = self._upstream(att)
        self.a_start = self._upstream(w0 * ds)
        self.a_end = self._upstream(w1 * ds)

    def _upstream(self, arr: np.ndarray) -> np.ndarray:
        """Flip the spatial axis of the negative-direction columns."""
        out = np.array(arr, dtype=float, copy=True)
        out[:, self.neg] = arr[::-1, self.neg]
        return out

    def _nodal_source(self, psi_lagged, intensity_prev, q):
        """Combined source at both ends of every cell, upstream-ordered.

        Scattering uses the coefficient of the cell being crossed, so a node on a
        material interface contributes different values to its two cells.
        """
        sig = self.sigma_s_cell[:, None]
        rest = q + intensity_prev * self.inv_cht
        s_left = sig * psi_lagged[:-1, None] + rest[:-1]   # at x_i, cell i
        s_right = sig * psi_lagged[1:, None] + rest[1:]    # at x_{i+1}, cell i
        s_start = np.where(self.pos, s_left, 0.0)
        s_end = np.where(self.pos, s_right, 0.0)
        # Negative directions enter a cell at its right node.
        s_start[:, self.neg] = s_right[::-1, self.neg]
        s_end[:, self.neg] = s_left[::-1, self.neg]
        return s_start, s_end

    def boundary_values(self, t: float) -> np.ndarray:
        p = self.problem
        inflow = np.empty(self.quadrature.n_q)
        inflow[self.pos] = sample_on_grid(p.inflow_left, t, self.mu[self.pos],
                                          shape=(int(self.pos.sum()),))
        inflow[self.neg] = sample_on_grid(p.inflow_right, t, self.mu[self.neg],
                                          shape=(int(self.neg.sum()),))
        return inflow

    def source_values(self, t: float) -> np.ndarray:
        return sample_on_grid(self.problem.source, t, self.x[:, None], self.mu[None, :],
                              shape=(len(self.x), self.quadrature.n_q))

    def initial_intensity(self) -> np.ndarray:
        return sample_on_grid(self.problem.initial, self.x[:, None], self.mu[None, :],
                              shape=(len(self.x), self.quadrature.n_q))

    def sweep(self, state: SweepState, new_time: float, *, q=None, inflow=None) -> np.ndarray:
        """One transport sweep over all directions with the scattering source lagged."""
        if q is None:
            q = self.source_values(new_time)
        if inflow is None:
            inflow = self.boundary_values(new_time)
        s_start, s_end = self._nodal_source(state.psi_lagged, state.intensity_prev_time, q)
        src = self.a_start * s_start + self.a_end * s_end
        n_x = self.problem.geometry.n_x
        up = np.empty((n_x + 1, self.quadrature.n_q))
        up[0] = inflow
        att = self.att
        for k in range(n_x):
            up[k + 1] = att[k] * up[k] + src[k]
        intensity = self._upstream(up)
        if not np.all(np.isfinite(intensity)):
            raise NumericError(f"non-finite intensity at t={new_time}")
        state.intensity_current = intensity
        return intensity

    def residual(self, psi_new: np.ndarray, psi_old: np.ndarray) -> float:
        """Discrete L2 norm of the change, scaled by sqrt(h_x)."""
        return float(np.linalg.norm(psi_new - psi_old) * math.sqrt(self.problem.geometry.h_x))

    def source_iteration(self, I_prev_time: np.ndarray, new_time: float, *, time_level: int = 0,
                         residuals: list | None = None):
        """Iterate sweeps at ``new_time`` until the scalar flux settles.

        Returns ``(intensity, psi, iterations)`` where ``iterations`` counts sweeps.
        """
        p = self.problem
        q = self.source_values(new_time)
        inflow = self.boundary_values(new_time)
        state = SweepState(intensity_prev_time=I_prev_time,
                           psi_lagged=scalar_flux_at_nodes(I_prev_time, self.quadrature),
                           time_level=time_level)
        res = math.inf
        for l in range(p.si_max_iter):
            state.si_index = l
            intensity = self.sweep(state, new_time, q=q, inflow=inflow)
            psi = scalar_flux_at_nodes(intensity, self.quadrature)
            res = self.residual(psi, state.psi_lagged)
            if residuals is not None:
                residuals.append(res)
            state.psi_lagged = psi
            if res < p.si_tol:
                return intensity, psi, l + 1
        raise ConvergenceError(
            f"source iteration did not converge at t={new_time} after "
            f"{p.si_max_iter} sweeps (residual {res:.3e} >= {p.si_tol:.3e})",
            residual=res, iterations=p.si_max_iter,
        )

    def solve(self, detector_times: Sequence[float] = ()):
        p = self.problem
        levels = [p.time_index(t) for t in detector_times]
        times = p.times
        intensity = self.initial_intensity()
        psi = np.empty((p.n_t + 1, p.geometry.n_x + 1))
        psi[0] = scalar_flux_at_nodes(intensity, self.quadrature)
        iterations = []
        for k in range(p.n_t):
            intensity, psi[k + 1], n_it = self.source_iteration(
                intensity, times[k + 1], time_level=k + 1)
            iterations.append(n_it)
        log.debug("solved %d steps, %d sweeps total", p.n_t, sum(iterations))
        solution = SpaceTimeSolution(times=times, x=self.x, psi=psi,
                                     intensity_final=intensity, si_iterations=iterations)
        readout = DetectorReadout(
            times=[float(t) for t in detector_times],
            psi_left=[float(psi[k, 0]) for k in levels],
            psi_right=[float(psi[k, -1]) for k in levels],
        )
        return solution, readout


def sweep(state: SweepState, problem: TransportProblem, quadrature: AngularQuadrature,
          new_time: float) -> np.ndarray:
    return MocSolver(problem, quadrature).sweep(state, new_time)


def source_iteration(problem: TransportProblem, quadrature: AngularQuadrature,
                     I_prev_time: np.ndarray, new_time: float):
    return MocSolver(problem, quadrature).source_iteration(I_prev_time, new_time)


def solve(problem: TransportProblem, quadrature: AngularQuadrature,
          detector_times: Sequence[float] = ()):
    """Advance the problem from ``t = 0`` to ``t_f``.

    Returns a :class:`SpaceTimeSolution` with the scalar flux at every level and
    a :class:`DetectorReadout` with the boundary fluxes at ``detector_times``,
    each of which must be a grid time.
    """
    return MocSolver(problem, quadrature).solve(detector_times)
