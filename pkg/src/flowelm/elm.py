"""Extreme learning machine: random hidden layer, closed-form output weights.

Input weights and biases are drawn once from a seeded generator and never
updated; only the hidden-to-output weights are learned, as the minimum-norm
least-squares solution against the 0/1 targets. Scores are the raw network
outputs (not clipped to [0, 1]); thresholding happens in predict().
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DataError, ShapeError
from .rng import Rng


class Activation(enum.Enum):
    """Hidden-node activation. Declaration order is the tie-break order."""

    TANH = "tanh"
    SIGMOID = "sigmoid"
    RBF = "rbf"

    @classmethod
    def from_name(cls, name: str) -> "Activation":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise DataError(
                f"unknown activation {name!r}; expected tanh, sigmoid, or rbf"
            ) from None


@dataclass(frozen=True)
class ElmParams:
    hidden_nodes: int
    activation: Activation
    seed: int
    rbf_gamma: float = 1.0

    def __post_init__(self):
        if self.hidden_nodes < 1:
            raise DataError("hidden_nodes must be >= 1")
        if not self.rbf_gamma > 0:
            raise DataError("rbf_gamma must be positive")


@dataclass(frozen=True, eq=False)
class ElmModel:
    """Frozen trained classifier; safe to share across threads."""

    input_weights: np.ndarray  # (n_features, hidden_nodes)
    biases: np.ndarray  # (1, hidden_nodes)
    output_weights: np.ndarray  # (hidden_nodes, 1)
    params: ElmParams
    n_features: int

    def __post_init__(self):
        n, width = self.n_features, self.params.hidden_nodes
        for name in ("input_weights", "biases", "output_weights"):
            arr = np.array(getattr(self, name), dtype=np.float64, order="C", copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.input_weights.shape != (n, width):
            raise ShapeError(
                f"input weights shaped {self.input_weights.shape}, expected {(n, width)}"
            )
        if self.biases.shape != (1, width):
            raise ShapeError(f"biases shaped {self.biases.shape}, expected {(1, width)}")
        if self.output_weights.shape != (width, 1):
            raise ShapeError(
                f"output weights shaped {self.output_weights.shape}, expected {(width, 1)}"
            )
        for arr in (self.input_weights, self.biases, self.output_weights):
            if not np.isfinite(arr).all():
                raise DataError("model weights contain non-finite values")


def init_random(params: ElmParams, n_features: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform [-1, 1] input weights and biases.

    Draw order (weights row-major first, then biases) is fixed so identical
    (seed, n_features, hidden_nodes) always reproduce the same bits.
    """
    if n_features < 1:
        raise DataError("n_features must be >= 1")
    rng = Rng(params.seed)
    w = rng.uniform_matrix(n_features, params.hidden_nodes, -1.0, 1.0)
    b = rng.uniform_matrix(1, params.hidden_nodes, -1.0, 1.0)
    return w, b


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def hidden_layer(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    activation: Activation,
    rbf_gamma: float = 1.0,
) -> np.ndarray:
    """Hidden-node responses for every sample.

    Tanh/sigmoid nodes apply the activation to x @ w + b. RBF nodes treat
    each column of w as a center and respond exp(-gamma * ||x_i - w_j||^2);
    the bias row is ignored for RBF.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2:
        raise ShapeError("hidden_layer inputs must be 2-D")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"cannot combine samples {x.shape} with weights {w.shape}")
    if b.shape != (1, w.shape[1]):
        raise ShapeError(f"biases shaped {b.shape}, expected {(1, w.shape[1])}")

    if activation is Activation.RBF:
        h = np.empty((x.shape[0], w.shape[1]))
        for j in range(w.shape[1]):
            diff = x - w[:, j]
            h[:, j] = np.exp(-rbf_gamma * np.einsum("ij,ij->i", diff, diff))
        return h

    z = x @ w + b
    if activation is Activation.TANH:
        return np.tanh(z)
    if activation is Activation.SIGMOID:
        return _sigmoid(z)
    raise DataError(f"unsupported activation {activation!r}")


def _check_labels(y, n_rows: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_rows:
        raise ShapeError(f"labels must be a vector of length {n_rows}")
    y = y.astype(np.int64)
    if y.size and not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    return y


def fit(x_train, y_train, params: ElmParams) -> ElmModel:
    """Train on 0/1 labels: random hidden layer, least-squares output weights.

    Pure function of (x_train, y_train, params); repeated calls are
    bit-identical.
    """
    x = np.asarray(x_train, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("training features must be 2-D")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise DataError("training set must have at least one sample and one feature")
    if not np.isfinite(x).all():
        bad_rows = np.where(~np.isfinite(x).all(axis=1))[0]
        raise DataError(f"non-finite feature value in row {bad_rows[0]}")
    y = _check_labels(y_train, x.shape[0])

    w, b = init_random(params, x.shape[1])
    h = hidden_layer(x, w, b, params.activation, params.rbf_gamma)
    targets = y.astype(np.float64).reshape(-1, 1)
    beta = linalg.lstsq(h, targets)
    return ElmModel(
        input_weights=w,
        biases=b,
        output_weights=beta,
        params=params,
        n_features=x.shape[1],
    )


def score(model: ElmModel, x) -> np.ndarray:
    """Raw network output per sample (one float each)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("scoring input must be 2-D")
    if x.shape[1] != model.n_features:
        raise ShapeError(
            f"model expects {model.n_features} features, got {x.shape[1]}"
        )
    h = hidden_layer(
        x, model.input_weights, model.biases, model.params.activation, model.params.rbf_gamma
    )
    return np.ascontiguousarray((h @ model.output_weights).ravel())


def predict(model: ElmModel, x, threshold: float = 0.5) -> np.ndarray:
    """Binary labels: 1 wherever score >= threshold."""
    return (score(model, x) >= threshold).astype(np.int64)
