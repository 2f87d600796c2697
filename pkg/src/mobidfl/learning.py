"""Local trainers: softmax regression and a one-hidden-layer tanh MLP.

Parameters live in one flat float64 vector per client; :class:`ModelSpec`
knows how to slice it into weight matrices and bias vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ContractViolation, NumericalError

KINDS = ("logistic", "mlp")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    n_features: int
    n_classes: int
    hidden: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown trainer kind {self.kind!r}; expected one of {KINDS}")
        if self.n_features < 1 or self.n_classes < 2:
            raise ConfigError("need at least one feature and two classes")
        if self.kind == "mlp" and self.hidden < 1:
            raise ConfigError("mlp trainer needs hidden >= 1")

    @property
    def layers(self) -> list[tuple[str, tuple[int, ...]]]:
        if self.kind == "logistic":
            return [("W", (self.n_classes, self.n_features)), ("b", (self.n_classes,))]
        return [
            ("W1", (self.hidden, self.n_features)),
            ("b1", (self.hidden,)),
            ("W2", (self.n_classes, self.hidden)),
            ("b2", (self.n_classes,)),
        ]

    @property
    def size(self) -> int:
        return sum(math.prod(shape) for _, shape in self.layers)

    def unpack(self, theta: np.ndarray) -> dict[str, np.ndarray]:
        if theta.shape != (self.size,):
            raise ContractViolation(f"parameter vector has shape {theta.shape}, expected ({self.size},)")
        out, pos = {}, 0
        for name, shape in self.layers:
            n = math.prod(shape)
            out[name] = theta[pos : pos + n].reshape(shape)
            pos += n
        return out

    def weight_mask(self) -> np.ndarray:
        """1.0 on weight-matrix entries, 0.0 on biases."""
        mask = np.zeros(self.size)
        pos = 0
        for name, shape in self.layers:
            n = math.prod(shape)
            if name.startswith("W"):
                mask[pos : pos + n] = 1.0
            pos += n
        return mask


@dataclass(frozen=True)
class OptimizerState:
    lr: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    buffer: np.ndarray | None = field(default=None, compare=False)


def init_model(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero."""
    theta = np.zeros(spec.size)
    parts = spec.unpack(theta)
    for name, shape in spec.layers:
        if name.startswith("W"):
            bound = 1.0 / math.sqrt(shape[1])
            parts[name][...] = rng.uniform(-bound, bound, size=shape)
    return theta


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward(spec: ModelSpec, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    p = spec.unpack(theta)
    if spec.kind == "logistic":
        return X @ p["W"].T + p["b"]
    h = np.tanh(X @ p["W1"].T + p["b1"])
    return h @ p["W2"].T + p["b2"]


def loss_and_gradient(
    spec: ModelSpec,
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its analytic gradient."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise ContractViolation("empty batch")
    if X.shape[1] != spec.n_features:
        raise ContractViolation(f"batch has {X.shape[1]} features, model expects {spec.n_features}")

    p = spec.unpack(theta)
    grad = np.zeros_like(theta)
    g = spec.unpack(grad)
    rows = np.arange(n)

    if spec.kind == "logistic":
        logp = _log_softmax(X @ p["W"].T + p["b"])
        delta = np.exp(logp)
        delta[rows, y] -= 1.0
        delta /= n
        g["W"][...] = delta.T @ X
        g["b"][...] = delta.sum(axis=0)
    else:
        h = np.tanh(X @ p["W1"].T + p["b1"])
        logp = _log_softmax(h @ p["W2"].T + p["b2"])
        delta = np.exp(logp)
        delta[rows, y] -= 1.0
        delta /= n
        g["W2"][...] = delta.T @ h
        g["b2"][...] = delta.sum(axis=0)
        back = (delta @ p["W2"]) * (1.0 - h * h)
        g["W1"][...] = back.T @ X
        g["b1"][...] = back.sum(axis=0)

    loss = float(-logp[rows, y].mean())
    if not math.isfinite(loss) or not np.isfinite(grad).all():
        raise NumericalError("non-finite loss or gradient")
    return loss, grad


def sgd_step(
    theta: np.ndarray,
    grad: np.ndarray,
    opt: OptimizerState,
    decay_mask: np.ndarray | float = 1.0,
) -> tuple[np.ndarray, OptimizerState]:
    """Heavy-ball step: ``m = mu*m + (g + lambda*x)``, ``x = x - lr*m``."""
    step = grad + opt.weight_decay * decay_mask * theta if opt.weight_decay else grad
    if opt.momentum:
        buf = step if opt.buffer is None else opt.momentum * opt.buffer + step
    else:
        buf = step
    return theta - opt.lr * buf, replace(opt, buffer=buf if opt.momentum else None)


def local_update(
    spec: ModelSpec,
    theta: np.ndarray,
    opt: OptimizerState,
    X: np.ndarray,
    y: np.ndarray,
    decay_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, OptimizerState, float]:
    """One gradient step on ``(X, y)``; returns the new parameters, optimizer state and pre-step loss.

    Weight decay skips biases; pass ``decay_mask`` (from :meth:`ModelSpec.weight_mask`)
    to avoid rebuilding it on every call.
    """
    loss, grad = loss_and_gradient(spec, theta, X, y)
    theta, opt = sgd_step(theta, grad, opt, spec.weight_mask() if decay_mask is None else decay_mask)
    return theta, opt, loss


def predict(spec: ModelSpec, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(forward(spec, theta, np.asarray(X, dtype=np.float64)), axis=1)


def evaluate(spec: ModelSpec, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    y = np.asarray(y)
    if y.size == 0:
        raise ContractViolation("empty test set")
    return float(np.mean(predict(spec, theta, X) == y))
