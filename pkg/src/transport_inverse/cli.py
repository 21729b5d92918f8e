"""Command-line driver.

Run with no subcommand arguments, ``verify``, ``gen-data``, ``train`` and
``eval`` run the full default pipeline into the output directory
(``--out``, else ``$TRANSPORT_INVERSE_OUT``, else ``./out``).

Exit codes: 0 success, 1 computational failure or unmet threshold,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import mlp
from .config import load_config, merge, problem_from_config, solver_config
from .errors import (
    ConfigurationError,
    ConvergenceError,
    NumericError,
    ParseError,
    SchemaError,
    TrainingDiverged,
)
from .model import build_gauss_legendre
from .solver import solve
from .verification import TABLE1_KAPPAS, exact_row, run_table1, write_table1

log = logging.getLogger("transport_inverse")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
EPS_REL_THRESHOLD = 1e-2


class UsageError(Exception):
    pass


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("TRANSPORT_INVERSE_OUT") or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _problems(args) -> list[str]:
    if args.problem is None:
        return list(ds_mod.PROBLEMS)
    return [ds_mod.problem_id(args.problem)]


def _short(pid: str) -> str:
    return "p1" if pid == "homogeneous" else "p2"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    out = _out_dir(args)
    kappas = tuple(args.kappa) if args.kappa else TABLE1_KAPPAS
    h_t = args.h_t if args.h_t is not None else (args.t_f / args.n_t if args.n_t else 0.01)
    rows = run_table1(kappas, n_x=args.n_x, n_q=args.n_q, h_t=h_t, t_f=args.t_f,
                      si_tol=args.si_tol)
    path = out / "table1.csv"
    write_table1(rows, path, t_f=args.t_f)
    print(f"{'kappa':>8} {'psi(0.0)':>12} {'psi(0.5)':>12} {'psi(1.0)':>12} {'eps_rel':>10}")
    for r in rows:
        print(f"{r.kappa:8.3g} " + " ".join(f"{v:12.4e}" for v in r.psi) + f" {r.eps_rel:10.2e}")
    print(f"{'exact':>8} " + " ".join(f"{v:12.4e}" for v in exact_row(t_f=args.t_f)))
    print(f"wrote {path}")
    ok = all(r.eps_rel < EPS_REL_THRESHOLD for r in rows)
    if not ok:
        print(f"eps_rel threshold {EPS_REL_THRESHOLD:g} not met", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# -- solve -------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if args.kappa is not None:
        n_reg = len(cfg["material"]["breakpoints"]) - 1
        if len(args.kappa) != n_reg:
            raise UsageError(f"--kappa needs {n_reg} value(s) for this material")
        cfg["material"]["kappa"] = list(args.kappa)
    if args.detector_times:
        cfg["detector_times"] = list(args.detector_times)
    problem = problem_from_config(cfg)
    quad = build_gauss_legendre(int(cfg["quadrature"]["n_q"]))
    try:
        solution, readout = solve(problem, quad, cfg["detector_times"])
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    out = _out_dir(args)
    solution.write_history(out / "history.csv")
    solution.write_trace(out / "trace.csv")
    print("t,psi_left,psi_right")
    for t, left, right in zip(readout.times, readout.psi_left, readout.psi_right):
        print(f"{_fmt(t)},{_fmt(left)},{_fmt(right)}")
    print(f"wrote {out / 'history.csv'} and {out / 'trace.csv'}", file=sys.stderr)
    return EXIT_OK


# -- gen-data ----------------------------------------------------------------

def cmd_gen_data(args) -> int:
    cfg = load_config(args.config)
    sc = solver_config(cfg)
    out = _out_dir(args)
    roles = [args.role] if args.role else list(ds_mod.ROLES)
    for pid in _problems(args):
        for role in roles:
            if role == "train":
                data = ds_mod.build_dataset(pid, "train", ds_mod.grid_kappas(pid), config=sc,
                                            jobs=args.jobs)
            else:
                spec = cfg["test_sets"][pid]
                n = args.n if args.n is not None else int(spec["n"])
                seed = args.seed if args.seed is not None else int(spec["seed"])
                data = ds_mod.generate_random_test(pid, n, seed, config=sc, jobs=args.jobs)
            path = out / f"{_short(pid)}_{role}.csv"
            ds_mod.write_dataset(data, path)
            X, Y = data.X, data.Y
            print(f"{pid}/{role}: {len(data)} samples -> {path}")
            print(f"  inputs  min {np.array2string(X.min(axis=0), precision=4)} "
                  f"max {np.array2string(X.max(axis=0), precision=4)}")
            print(f"  targets min {np.array2string(Y.min(axis=0), precision=4)} "
                  f"max {np.array2string(Y.max(axis=0), precision=4)}")
    return EXIT_OK


# -- train / eval --------------------------------------------------------------

def _train_settings(cfg, pid, args) -> dict:
    s = dict(cfg["training"][pid])
    overrides = {"learning_rate": args.lr, "max_epochs": args.max_epochs,
                 "loss_target": args.loss_target, "seed": args.seed,
                 "optimizer": args.optimizer}
    s.update({k: v for k, v in overrides.items() if v is not None})
    if args.standardize:
        s["standardize"] = True
    return s


def _read(path: Path) -> ds_mod.Dataset:
    if not path.exists():
        raise UsageError(f"{path} not found; run gen-data first")
    return ds_mod.read_dataset(path)


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    for pid in _problems(args):
        s = _train_settings(cfg, pid, args)
        data = _read(Path(args.data) if args.data else out / f"{_short(pid)}_train.csv")
        if data.problem != pid:
            raise UsageError(f"{args.data} holds {data.problem} data, not {pid}")
        model = mlp.init_model(s["arch"], seed=int(s["seed"]),
                               standardize_from=data.X if s["standardize"] else None)
        tc = mlp.TrainConfig(learning_rate=float(s["learning_rate"]),
                             max_epochs=int(s["max_epochs"]),
                             loss_target=float(s["loss_target"]),
                             rng_seed=int(s["seed"]), optimizer=s["optimizer"])
        model, history = mlp.train(model, data.X, data.Y, tc)
        tag = _short(pid)
        mlp.save_model(model, out / f"{tag}_model.json")
        mlp.write_history(history, out / f"{tag}_loss.csv")
        loss, r2 = mlp.evaluate(model, data.X, data.Y)
        reached = "reached" if loss < tc.loss_target else "NOT reached"
        print(f"{pid}: {len(history)} epochs, L_train={loss:.3e} "
              f"(target {tc.loss_target:g} {reached}), R2_train={_r2s(r2)}")
    return EXIT_OK


def _r2s(r2) -> str:
    return "[" + ", ".join(f"{v:.6f}" for v in r2) + "]"


def cmd_eval(args) -> int:
    out = _out_dir(args)
    for pid in _problems(args):
        tag = _short(pid)
        model_path = Path(args.model) if args.model else out / f"{tag}_model.json"
        if not model_path.exists():
            raise UsageError(f"{model_path} not found; run train first")
        model = mlp.load_model(model_path)
        test = _read(Path(args.data) if args.data else out / f"{tag}_test.csv")
        sets = [("test", test)]
        train_path = out / f"{tag}_train.csv"
        if not args.data and train_path.exists():
            sets.append(("train", ds_mod.read_dataset(train_path)))
        rows = []
        for name, data in sets:
            loss, r2 = mlp.evaluate(model, data.X, data.Y)
            print(f"{pid}/{name}: MSE={loss:.3e} R2={_r2s(r2)}")
            pred = mlp.forward(model, data.X)
            for s in range(len(data)):
                for c in range(pred.shape[1]):
                    rows.append([name, c + 1, _fmt(data.Y[s, c]), _fmt(pred[s, c])])
        path = out / f"{tag}_scatter.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["set", "component", "expected", "estimated"])
            w.writerows(rows)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    model = mlp.load_model(args.model)
    if len(args.readings) != model.input_dim:
        raise UsageError(f"model expects {model.input_dim} readings, got {len(args.readings)}")
    for v in mlp.forward(model, np.array(args.readings, dtype=float)):
        print(_fmt(v))
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="seed for random test sets / network init")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel solver processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="transport-inverse",
        description="MoC transport solver and neural-network absorption estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="manufactured-solution table")
    p.add_argument("--kappa", type=float, action="append")
    p.add_argument("--n-x", type=int, default=100)
    p.add_argument("--n-q", type=int, default=100)
    p.add_argument("--n-t", type=int, help="time steps over t_f (overrides the default h_t=0.01)")
    p.add_argument("--h-t", type=float)
    p.add_argument("--t-f", type=float, default=1.0)
    p.add_argument("--si-tol", type=float, default=1.49e-8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", parents=[common], help="single direct solve")
    p.add_argument("--kappa", type=float, nargs="+")
    p.add_argument("--detector-times", type=float, nargs="+")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen-data", parents=[common], help="build training/test datasets")
    p.add_argument("--problem", choices=["p1", "p2", *ds_mod.PROBLEMS])
    p.add_argument("--role", choices=ds_mod.ROLES)
    p.add_argument("--n", type=int, help="test-set size")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="train the estimator network")
    p.add_argument("--problem", choices=["p1", "p2", *ds_mod.PROBLEMS])
    p.add_argument("--data", help="training CSV (default <out>/<p>_train.csv)")
    p.add_argument("--lr", type=float)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--loss-target", type=float)
    p.add_argument("--optimizer", choices=mlp.OPTIMIZERS)
    p.add_argument("--standardize", action="store_true", help="standardize inputs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score a trained network")
    p.add_argument("--problem", choices=["p1", "p2", *ds_mod.PROBLEMS])
    p.add_argument("--model")
    p.add_argument("--data", help="test CSV (default <out>/<p>_test.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("estimate", parents=[common], help="estimate kappa from readings")
    p.add_argument("--model", required=True)
    p.add_argument("--readings", type=float, nargs="+", required=True,
                   help="detector values in dataset column order")
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, NumericError, TrainingDiverged) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
