"""Fully connected network trained on the full batch every epoch.

Layer ``l`` maps ``y`` to ``f_l(W_l y + b_l)`` with ``W_l`` of shape
``(m_l, m_{l-1})``. Batches are row-stacked, so a batch of ``n`` inputs is an
``(n, m_0)`` array and each layer computes ``f(Y @ W.T + b)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError, TrainingDiverged

ACTIVATIONS = ("tanh", "identity")


def _activate(name, z):
    return np.tanh(z) if name == "tanh" else z


def _activate_grad(name, y):
    """Derivative expressed through the activation output."""
    return 1.0 - y * y if name == "tanh" else np.ones_like(y)


@dataclass(frozen=True)
class LayerSpec:
    units: int
    activation: str = "tanh"

    def __post_init__(self):
        if int(self.units) != self.units or self.units < 1:
            raise ValueError(f"layer needs >= 1 unit, got {self.units}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class MlpModel:
    input_dim: int
    layers: list[LayerSpec]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int | None = None
    init: str = "uniform-glorot"
    # Optional affine input standardization, x -> (x - shift) / scale.
    input_shift: np.ndarray | None = None
    input_scale: np.ndarray | None = None

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        if len(self.weights) != len(self.layers) or len(self.biases) != len(self.layers):
            raise SchemaError("one weight matrix and one bias vector per layer required")
        prev = self.input_dim
        for l, (spec, W, b) in enumerate(zip(self.layers, self.weights, self.biases)):
            if W.shape != (spec.units, prev) or b.shape != (spec.units,):
                raise SchemaError(
                    f"layer {l + 1}: expected W {(spec.units, prev)} and b {(spec.units,)}, "
                    f"got {W.shape} and {b.shape}"
                )
            prev = spec.units

    @property
    def arch(self) -> list[int]:
        return [self.input_dim] + [s.units for s in self.layers]

    @property
    def activations(self) -> list[str]:
        return [s.activation for s in self.layers]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].units

    def copy(self) -> "MlpModel":
        return replace(self, weights=[W.copy() for W in self.weights],
                       biases=[b.copy() for b in self.biases])

    def _prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs with {self.input_dim} columns, got shape {X.shape}")
        if self.input_shift is not None:
            X = (X - self.input_shift) / self.input_scale
        return X

    def activations_trace(self, X) -> list[np.ndarray]:
        """Outputs of every layer, starting with the (prepared) input."""
        ys = [self._prepare(X)]
        for spec, W, b in zip(self.layers, self.weights, self.biases):
            ys.append(_activate(spec.activation, ys[-1] @ W.T + b))
        return ys


def init_model(architecture, activations=None, seed=0, standardize_from=None) -> MlpModel:
    """Zero biases and weights uniform on ``(-r, r)``, ``r = sqrt(6 / (fan_in + fan_out))``.

    ``activations`` defaults to tanh on hidden layers and identity on the
    output. Passing training inputs as ``standardize_from`` turns on input
    standardization with their column mean and standard deviation.
    """
    architecture = [int(m) for m in architecture]
    if len(architecture) < 2:
        raise ValueError("architecture needs an input size and at least one layer")
    n_layers = len(architecture) - 1
    if activations is None:
        activations = ["tanh"] * (n_layers - 1) + ["identity"]
    if len(activations) != n_layers:
        raise ValueError(f"{n_layers} layers but {len(activations)} activations")
    rng = np.random.Generator(np.random.PCG64(seed))
    layers, weights, biases = [], [], []
    for fan_in, fan_out, act in zip(architecture[:-1], architecture[1:], activations):
        layers.append(LayerSpec(fan_out, act))
        r = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    shift = scale = None
    if standardize_from is not None:
        Xs = np.asarray(standardize_from, dtype=float)
        shift = Xs.mean(axis=0)
        scale = Xs.std(axis=0)
        scale[scale == 0] = 1.0
    return MlpModel(architecture[0], layers, weights, biases, seed=seed,
                    input_shift=shift, input_scale=scale)


def forward(model: MlpModel, inputs) -> np.ndarray:
    """Network output; a single input vector gives a 1-D result, a batch a 2-D one."""
    out = model.activations_trace(inputs)[-1]
    return out[0] if np.ndim(inputs) == 1 else out


def _as_batch(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def mse_loss(predictions, targets) -> float:
    """Mean over samples of the squared Euclidean error of the output vector."""
    P, T = _as_batch(predictions), _as_batch(targets)
    if P.shape != T.shape:
        raise ValueError(f"prediction shape {P.shape} != target shape {T.shape}")
    if P.shape[0] == 0:
        raise ValueError("empty sample set")
    return float(np.sum((P - T) ** 2) / P.shape[0])


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def backward(model: MlpModel, inputs, targets):
    """Reverse-mode gradients of the batch MSE; returns ``(loss, Gradients)``."""
    ys = model.activations_trace(inputs)
    T = _as_batch(targets)
    out = ys[-1]
    if T.shape != out.shape:
        raise ValueError(f"target shape {T.shape} != output shape {out.shape}")
    n = out.shape[0]
    loss = float(np.sum((out - T) ** 2) / n)
    delta = 2.0 * (out - T) / n  # dL/dy at the output
    gW, gb = [], []
    for l in range(len(model.layers) - 1, -1, -1):
        delta = delta * _activate_grad(model.layers[l].activation, ys[l + 1])  # dL/dz
        gW.append(delta.T @ ys[l])
        gb.append(delta.sum(axis=0))
        if l:
            delta = delta @ model.weights[l]
    return loss, Gradients(gW[::-1], gb[::-1])


def gd_step(model: MlpModel, grads: Gradients, lr: float) -> MlpModel:
    """Return a new model moved by ``-lr`` times the gradients."""
    for W, g in zip(model.weights, grads.weights):
        if W.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != weight shape {W.shape}")
    return replace(model,
                   weights=[W - lr * g for W, g in zip(model.weights, grads.weights)],
                   biases=[b - lr * g for b, g in zip(model.biases, grads.biases)])


OPTIMIZERS = ("adam", "gd")


@dataclass
class AdamState:
    """First and second moment estimates, one pair per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        params = model.weights + model.biases
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(model: MlpModel, grads: Gradients, lr: float, state: AdamState,
              beta1=0.9, beta2=0.999, eps=1e-8) -> MlpModel:
    """Bias-corrected Adam update; advances ``state`` in place."""
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    new = []
    for k, (p, g) in enumerate(zip(model.weights + model.biases, grads.weights + grads.biases)):
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        new.append(p - lr * (state.m[k] / c1) / (np.sqrt(state.v[k] / c2) + eps))
    n = len(model.weights)
    return replace(model, weights=new[:n], biases=new[n:])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 30000
    loss_target: float = 1e-6
    rng_seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not self.loss_target > 0:
            raise ValueError(f"loss_target must be > 0, got {self.loss_target}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")


def train(model: MlpModel, inputs, targets, config: TrainConfig):
    """Full-batch training loop.

    Each epoch forwards the whole set, records the loss, stops if it is below
    ``config.loss_target`` and otherwise takes one optimizer step (plain
    gradient descent or Adam). Returns the final model and the per-epoch loss
    history.
    """
    X, T = np.asarray(inputs, dtype=float), _as_batch(targets)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    adam = AdamState.zeros_like(model) if config.optimizer == "adam" else None
    history = []
    for epoch in range(1, config.max_epochs + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = backward(model, X, T)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at epoch {epoch}", epoch)
        history.append(loss)
        if loss < config.loss_target:
            break
        if adam is None:
            model = gd_step(model, grads, config.learning_rate)
        else:
            model = adam_step(model, grads, config.learning_rate, adam)
    return model, history


def r2_score(predictions, targets) -> np.ndarray:
    """Coefficient of determination per output component."""
    P, T = _as_batch(predictions), _as_batch(targets)
    if P.shape != T.shape:
        raise ValueError(f"prediction shape {P.shape} != target shape {T.shape}")
    ss_tot = np.sum((T - T.mean(axis=0)) ** 2, axis=0)
    if np.any(ss_tot == 0):
        raise ValueError(f"r2 undefined for constant target component(s) {np.flatnonzero(ss_tot == 0)}")
    return 1.0 - np.sum((P - T) ** 2, axis=0) / ss_tot


def evaluate(model: MlpModel, inputs, targets):
    """``(mse, r2_per_output)`` of the model on a labelled set."""
    P = forward(model, np.asarray(inputs, dtype=float).reshape(-1, model.input_dim))
    return mse_loss(P, targets), r2_score(P, targets)


def write_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for e, loss in enumerate(history, 1):
            w.writerow([e, f"{loss:.17g}"])


def save_model(model: MlpModel, path) -> None:
    doc = {
        "arch": model.arch,
        "activations": model.activations,
        "seed": model.seed,
        "init": model.init,
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    if model.input_shift is not None:
        doc["input_shift"] = model.input_shift.tolist()
        doc["input_scale"] = model.input_scale.tolist()
    # json writes floats with repr, which round-trips doubles exactly.
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path) -> MlpModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    try:
        arch = [int(m) for m in doc["arch"]]
        layers = [LayerSpec(m, a) for m, a in zip(arch[1:], doc["activations"], strict=True)]
        weights = [np.array(W, dtype=float) for W in doc["weights"]]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
    except KeyError as exc:
        raise ParseError(f"model file lacks key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model file: {exc}") from exc
    shift = doc.get("input_shift")
    scale = doc.get("input_scale")
    return MlpModel(arch[0], layers, weights, biases, seed=doc.get("seed"),
                    init=doc.get("init", "uniform-glorot"),
                    input_shift=None if shift is None else np.array(shift, dtype=float),
                    input_scale=None if scale is None else np.array(scale, dtype=float))
