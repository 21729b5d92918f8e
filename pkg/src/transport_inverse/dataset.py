"""Training and test sets for the two absorption-estimation problems.

Both problems use the slab [0, 1] with unit inflow on the left, vacuum on the
right, no volume source, and an initial intensity of 1 only at the left node
for forward directions. Detectors read the scalar flux at both boundaries.

- ``homogeneous``: one absorption coefficient, detectors at t = 3.
- ``heterogeneous``: ``kappa1`` on [0, 0.5], ``kappa2`` on (0.5, 1],
  detectors at t = 2 and t = 3.

The total coefficient is held at ``sigma_t`` in every region, so the
scattering coefficient of a region is ``sigma_t - kappa``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError, SchemaError
from .model import MaterialField, SlabGeometry, TransportProblem, build_gauss_legendre
from .solver import solve

log = logging.getLogger(__name__)

PROBLEMS = ("homogeneous", "heterogeneous")
ALIASES = {"p1": "homogeneous", "p2": "heterogeneous"}
ROLES = ("train", "test")
PRNG = "numpy-PCG64"
KAPPA_RANGE = (0.1, 0.9)


def problem_id(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PROBLEMS:
        raise ConfigurationError(f"unknown problem {name!r}; expected one of {PROBLEMS} or p1/p2")
    return name


@dataclass(frozen=True)
class SolverConfig:
    """Direct-solver settings shared by every sample of a dataset."""

    n_q: int = 100
    n_x: int = 100
    h_t: float = 0.01
    t_f: float = 3.0
    sigma_t: float = 1.0
    c: float = 1.0
    si_tol: float = 1.49e-8
    si_max_iter: int = 1000

    @property
    def n_t(self) -> int:
        n_t = round(self.t_f / self.h_t)
        if abs(n_t * self.h_t - self.t_f) > 1e-12 * max(1.0, self.t_f):
            raise ConfigurationError(f"t_f={self.t_f} is not a multiple of h_t={self.h_t}")
        return n_t


def detector_times(pid: str) -> tuple[float, ...]:
    return (3.0,) if problem_id(pid) == "homogeneous" else (2.0, 3.0)


def n_targets(pid: str) -> int:
    return 1 if problem_id(pid) == "homogeneous" else 2


def n_inputs(pid: str) -> int:
    return 2 * len(detector_times(pid))


def _left_unit_inflow(t, mu):
    return 1.0


def _right_vacuum(t, mu):
    return 0.0


def _left_node_forward(x, mu):
    return np.where((x == 0.0) & (mu > 0), 1.0, 0.0)


def _no_source(t, x, mu):
    return 0.0


def inverse_problem(pid: str, kappas, config: SolverConfig = SolverConfig()) -> TransportProblem:
    pid = problem_id(pid)
    kappas = tuple(float(k) for k in kappas)
    if len(kappas) != n_targets(pid):
        raise ConfigurationError(f"{pid} takes {n_targets(pid)} kappa value(s), got {len(kappas)}")
    breakpoints = (0.0, 1.0) if pid == "homogeneous" else (0.0, 0.5, 1.0)
    if any(k > config.sigma_t for k in kappas):
        raise ConfigurationError(f"kappa {kappas} exceeds sigma_t={config.sigma_t}")
    material = MaterialField(breakpoints, kappas, tuple(config.sigma_t - k for k in kappas))
    return TransportProblem(
        geometry=SlabGeometry(0.0, 1.0, config.n_x),
        material=material,
        t_f=config.t_f,
        n_t=config.n_t,
        c=config.c,
        inflow_left=_left_unit_inflow,
        inflow_right=_right_vacuum,
        initial=_left_node_forward,
        source=_no_source,
        si_tol=config.si_tol,
        si_max_iter=config.si_max_iter,
        meta={"preset": pid, "kappa": kappas},
    )


def detector_inputs(pid: str, kappas, config: SolverConfig = SolverConfig()) -> tuple[float, ...]:
    """Boundary scalar fluxes for one coefficient vector, in dataset column order."""
    problem = inverse_problem(pid, kappas, config)
    _, readout = solve(problem, build_gauss_legendre(config.n_q), detector_times(pid))
    return tuple(readout.as_vector())


@dataclass(frozen=True)
class Sample:
    inputs: tuple[float, ...]
    targets: tuple[float, ...]


@dataclass
class Dataset:
    problem: str
    role: str
    samples: list[Sample] = field(default_factory=list)
    seed: int | None = None
    config: SolverConfig = field(default_factory=SolverConfig)
    prng: str = PRNG

    def __post_init__(self):
        self.problem = problem_id(self.problem)
        if self.role not in ROLES:
            raise ConfigurationError(f"role must be one of {ROLES}, got {self.role!r}")
        n_in, n_out = n_inputs(self.problem), n_targets(self.problem)
        for s in self.samples:
            if len(s.inputs) != n_in or len(s.targets) != n_out:
                raise SchemaError(
                    f"{self.problem} samples need {n_in} inputs and {n_out} targets, "
                    f"got {len(s.inputs)} and {len(s.targets)}"
                )

    def __len__(self):
        return len(self.samples)

    @property
    def X(self) -> np.ndarray:
        return np.array([s.inputs for s in self.samples], dtype=float).reshape(
            len(self.samples), n_inputs(self.problem))

    @property
    def Y(self) -> np.ndarray:
        return np.array([s.targets for s in self.samples], dtype=float).reshape(
            len(self.samples), n_targets(self.problem))

    def columns(self) -> list[str]:
        times = detector_times(self.problem)
        d = [f"d{side}_t{t:g}" for side in (0, 1) for t in times]
        n_out = n_targets(self.problem)
        k = ["kappa"] if n_out == 1 else [f"kappa{m + 1}" for m in range(n_out)]
        return d + k


def _evaluate(args):
    pid, kappas, config = args
    return Sample(detector_inputs(pid, kappas, config), tuple(float(k) for k in kappas))


def build_dataset(pid, role, kappa_list, *, seed=None, config=SolverConfig(), jobs=1) -> Dataset:
    """Run the direct solver for every coefficient vector; output keeps input order."""
    pid = problem_id(pid)
    tasks = [(pid, tuple(k), config) for k in kappa_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            samples = list(pool.map(_evaluate, tasks))
    else:
        samples = []
        for n, task in enumerate(tasks, 1):
            samples.append(_evaluate(task))
            log.debug("%s/%s sample %d/%d", pid, role, n, len(tasks))
    return Dataset(pid, role, samples, seed=seed, config=config)


def grid_kappas(pid: str) -> list[tuple[float, ...]]:
    lo, hi = KAPPA_RANGE
    if problem_id(pid) == "homogeneous":
        return [(round(lo + s * 0.05, 12),) for s in range(17)]
    axis = [round(lo + s * 0.1, 12) for s in range(9)]
    return [(k1, k2) for k1 in axis for k2 in axis]


def random_kappas(pid: str, n: int, seed: int) -> list[tuple[float, ...]]:
    if n <= 0:
        raise ConfigurationError(f"sample count must be positive, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = KAPPA_RANGE
    draws = rng.uniform(lo, hi, size=(n, n_targets(pid)))
    return [tuple(float(v) for v in row) for row in draws]


def generate_grid_train_p1(config: SolverConfig = SolverConfig(), jobs: int = 1) -> Dataset:
    return build_dataset("homogeneous", "train", grid_kappas("homogeneous"), config=config, jobs=jobs)


def generate_grid_train_p2(config: SolverConfig = SolverConfig(), jobs: int = 1) -> Dataset:
    return build_dataset("heterogeneous", "train", grid_kappas("heterogeneous"), config=config, jobs=jobs)


def generate_random_test(pid: str, n: int, seed: int, config: SolverConfig = SolverConfig(),
                         jobs: int = 1) -> Dataset:
    return build_dataset(pid, "test", random_kappas(pid, n, seed), seed=seed, config=config, jobs=jobs)


# -- CSV persistence ---------------------------------------------------------

_CONFIG_FIELDS = tuple(SolverConfig.__dataclass_fields__)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_dataset(ds: Dataset, path) -> None:
    meta = {"problem": ds.problem, "role": ds.role,
            "seed": "none" if ds.seed is None else str(ds.seed)}
    for key, value in asdict(ds.config).items():
        meta[key] = _fmt(value) if isinstance(value, float) else str(value)
    meta["prng"] = ds.prng
    lines = ["# " + " ".join(f"{k}={v}" for k, v in meta.items()), ",".join(ds.columns())]
    for s in ds.samples:
        lines.append(",".join(_fmt(v) for v in s.inputs + s.targets))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> Dataset:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ParseError("missing '# key=value' metadata header", line=1)
    meta = {}
    for token in text[0][1:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"malformed metadata token {token!r}", line=1)
        meta[key] = value
    for key in ("problem", "role", "seed"):
        if key not in meta:
            raise ParseError(f"metadata lacks {key!r}", line=1)
    try:
        kwargs = {}
        for name, f in SolverConfig.__dataclass_fields__.items():
            if name in meta:
                kwargs[name] = int(meta[name]) if f.type == "int" else float(meta[name])
        config = SolverConfig(**kwargs)
        seed = None if meta["seed"] == "none" else int(meta["seed"])
        ds = Dataset(meta["problem"], meta["role"], [], seed=seed, config=config,
                     prng=meta.get("prng", PRNG))
    except (ValueError, ConfigurationError) as exc:
        raise ParseError(str(exc), line=1) from exc
    if len(text) < 2:
        raise ParseError("missing column header", line=2)
    header = text[1].split(",")
    if header != ds.columns():
        raise SchemaError(f"line 2: columns {header} do not match {ds.columns()}")
    n_in = n_inputs(ds.problem)
    for lineno, line in enumerate(text[2:], start=3):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(f"line {lineno}: expected {len(header)} columns, got {len(cells)}")
        try:
            values = tuple(float(c) for c in cells)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", line=lineno)
        ds.samples.append(Sample(values[:n_in], values[n_in:]))
    return ds
