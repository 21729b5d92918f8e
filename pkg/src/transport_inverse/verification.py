"""Manufactured-solution check of the direct solver.

The manufactured intensity ``exp(-sigma_t (x - t)^2)`` is isotropic, so it is
also the exact scalar flux. With ``c = 1`` it satisfies the transport equation
once the matching source below is added.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    MaterialField,
    SlabGeometry,
    TransportProblem,
    build_gauss_legendre,
)
from .solver import solve

TABLE1_KAPPAS = (0.9, 0.5, 0.1)
TABLE1_POINTS = (0.0, 0.5, 1.0)


def manufactured_intensity(t, x, mu, sigma_t):
    return np.exp(-sigma_t * (x - t) ** 2) + 0.0 * mu


def manufactured_source(t, x, mu, kappa, sigma_t):
    return (2.0 * sigma_t * (1.0 - mu) * (x - t) + kappa) * np.exp(-sigma_t * (x - t) ** 2)


def relative_l2_error(approx, exact) -> float:
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if approx.shape != exact.shape:
        raise ValueError(f"shape mismatch {approx.shape} vs {exact.shape}")
    norm = np.linalg.norm(exact)
    if norm == 0.0:
        raise ValueError("exact solution has zero norm")
    return float(np.linalg.norm(approx - exact) / norm)


@dataclass(frozen=True)
class ManufacturedCase:
    kappa: float
    sigma_t: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.kappa <= self.sigma_t:
            raise ValueError(f"need 0 <= kappa <= sigma_t, got kappa={self.kappa}")

    @property
    def sigma_s(self) -> float:
        return self.sigma_t - self.kappa

    def problem(self, *, n_x=100, h_t=0.01, t_f=1.0, a=0.0, b=1.0,
                si_tol=1.49e-8, si_max_iter=1000) -> TransportProblem:
        st, k = self.sigma_t, self.kappa
        geom = SlabGeometry(a, b, n_x)
        return TransportProblem(
            geometry=geom,
            material=MaterialField.homogeneous(a, b, k, self.sigma_s),
            t_f=t_f,
            n_t=max(1, round(t_f / h_t)),
            c=1.0,
            inflow_left=lambda t, mu: manufactured_intensity(t, a, mu, st),
            inflow_right=lambda t, mu: manufactured_intensity(t, b, mu, st),
            initial=lambda x, mu: manufactured_intensity(0.0, x, mu, st),
            source=lambda t, x, mu: manufactured_source(t, x, mu, k, st),
            si_tol=si_tol,
            si_max_iter=si_max_iter,
            meta={"preset": "manufactured", "kappa": k, "sigma_t": st},
        )


@dataclass
class Table1Row:
    kappa: float
    psi: tuple[float, float, float]
    eps_rel: float


def run_manufactured(kappa, *, sigma_t=1.0, n_x=100, n_q=100, h_t=0.01, t_f=1.0,
                     si_tol=1.49e-8):
    """Solve one manufactured case; returns ``(row, solution)``."""
    case = ManufacturedCase(kappa, sigma_t)
    problem = case.problem(n_x=n_x, h_t=h_t, t_f=t_f, si_tol=si_tol)
    solution, _ = solve(problem, build_gauss_legendre(n_q))
    psi_f = solution.psi[-1]
    exact = manufactured_intensity(problem.times[-1], solution.x, 0.0, sigma_t)
    geom = problem.geometry
    picks = []
    for x in TABLE1_POINTS:
        i = geom.node_index(x)
        picks.append(float(psi_f[i]) if i is not None else float(np.interp(x, solution.x, psi_f)))
    row = Table1Row(kappa=kappa, psi=tuple(picks), eps_rel=relative_l2_error(psi_f, exact))
    return row, solution


def run_table1(kappas=TABLE1_KAPPAS, **solver_kw) -> list[Table1Row]:
    return [run_manufactured(k, **solver_kw)[0] for k in kappas]


def exact_row(sigma_t=1.0, t_f=1.0) -> tuple[float, float, float]:
    return tuple(float(math.exp(-sigma_t * (x - t_f) ** 2)) for x in TABLE1_POINTS)


def write_table1(rows, path, sigma_t=1.0, t_f=1.0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kappa", "psi_0", "psi_05", "psi_1", "eps_rel"])
        for r in rows:
            w.writerow([f"{r.kappa:.17g}", *(f"{v:.17g}" for v in r.psi), f"{r.eps_rel:.17g}"])
        w.writerow(["exact", *(f"{v:.17g}" for v in exact_row(sigma_t, t_f)), ""])
