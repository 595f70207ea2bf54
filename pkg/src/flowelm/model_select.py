"""Hyperparameter search: stratified k-fold CV over a width/activation grid.

Every fold re-fits the scaler on its own training rows, so no validation
statistics leak into training. The network seed for a fold is derived from
(base seed, fold index, configuration content), which makes fold metrics a
pure function of the arguments: evaluation order, parallelism, and grid
enumeration cannot change any number.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import metrics
from . import elm
from .elm import Activation, ElmParams
from .errors import DataError, FlowElmError, StratificationError
from .preprocess import FlowDataset, apply_scaler, fit_scaler
from .rng import Rng, derive_seed, float_bits

DEFAULT_HIDDEN_NODES = (16, 32, 64, 128, 256, 512, 1024)

_METRICS = ("f1", "accuracy")


@dataclass(frozen=True)
class GridSpec:
    hidden_nodes: tuple[int, ...] = DEFAULT_HIDDEN_NODES
    activations: tuple[Activation, ...] = (Activation.TANH, Activation.SIGMOID, Activation.RBF)
    rbf_gammas: tuple[float, ...] = (1.0,)
    folds: int = 5
    seed: int = 0
    metric: str = "f1"

    def __post_init__(self):
        if not self.hidden_nodes or not self.activations or not self.rbf_gammas:
            raise DataError("grid candidate lists must be non-empty")
        if self.folds < 2:
            raise DataError("cross-validation needs at least 2 folds")
        if self.metric not in _METRICS:
            raise DataError(f"selection metric must be one of {_METRICS}")


def kfold_indices(labels, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified folds: each class is shuffled and dealt round-robin.

    Returns (train_indices, validation_indices) pairs, one per fold, both
    sorted ascending. Deterministic for a given seed.
    """
    labels = np.asarray(labels).astype(np.int64)
    if folds < 2:
        raise DataError("folds must be >= 2")
    rng = Rng(seed)
    assignment: list[list[int]] = [[] for _ in range(folds)]
    for cls in (0, 1):
        idx = [int(i) for i in np.where(labels == cls)[0]]
        if len(idx) < folds:
            raise StratificationError(
                f"class {cls} has {len(idx)} sample(s) but {folds} folds were requested"
            )
        rng.shuffle(idx)
        for position, row in enumerate(idx):
            assignment[position % folds].append(row)
    pairs = []
    for k in range(folds):
        valid = sorted(assignment[k])
        valid_set = set(valid)
        train = [i for i in range(labels.shape[0]) if i not in valid_set]
        pairs.append((np.array(train, dtype=np.int64), np.array(valid, dtype=np.int64)))
    return pairs


def _metric_value(cm: metrics.ConfusionMatrix, metric: str) -> float:
    if metric == "f1":
        return metrics.prf1(cm)[2]
    if metric == "accuracy":
        return metrics.accuracy(cm)
    raise DataError(f"selection metric must be one of {_METRICS}")


def _fold_seed(seed: int, fold_index: int, params: ElmParams) -> int:
    activation_ordinal = list(Activation).index(params.activation)
    return derive_seed(
        seed, fold_index, params.hidden_nodes, activation_ordinal, float_bits(params.rbf_gamma)
    )


def cross_validate(
    data: FlowDataset,
    params: ElmParams,
    folds: int,
    seed: int,
    metric: str = "f1",
) -> list[float]:
    """Per-fold validation metric for one configuration.

    The configuration's own seed field is ignored; each fold trains with a
    seed derived from (seed, fold index, configuration content).
    """
    scores = []
    for fold_index, (train_idx, valid_idx) in enumerate(kfold_indices(data.labels, folds, seed)):
        fold_params = replace(params, seed=_fold_seed(seed, fold_index, params))
        scaler = fit_scaler(data.features[train_idx])
        x_train = apply_scaler(scaler, data.features[train_idx])
        x_valid = apply_scaler(scaler, data.features[valid_idx])
        model = elm.fit(x_train, data.labels[train_idx], fold_params)
        pred = elm.predict(model, x_valid, 0.5)
        cm = metrics.confusion(data.labels[valid_idx], pred)
        scores.append(_metric_value(cm, metric))
    return scores


@dataclass(frozen=True)
class GridEntry:
    params: ElmParams
    fold_scores: tuple[float, ...]
    mean: float
    std: float
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    """Leaderboard (best first) plus the winning configuration."""

    entries: tuple[GridEntry, ...]
    best: ElmParams


def configurations(spec: GridSpec) -> list[ElmParams]:
    """Cross product of the grid; gamma candidates only pair with RBF."""
    configs = []
    for width in spec.hidden_nodes:
        for activation in spec.activations:
            gammas = spec.rbf_gammas if activation is Activation.RBF else (1.0,)
            for gamma in gammas:
                configs.append(
                    ElmParams(
                        hidden_nodes=width,
                        activation=activation,
                        seed=spec.seed,
                        rbf_gamma=gamma,
                    )
                )
    return configs


def _leaderboard_key(entry: GridEntry):
    # max mean first; ties prefer narrower nets, earlier activations, smaller gamma
    return (
        -entry.mean,
        entry.params.hidden_nodes,
        list(Activation).index(entry.params.activation),
        entry.params.rbf_gamma,
    )


def grid_search(data: FlowDataset, spec: GridSpec, workers: int = 1) -> GridResult:
    """Evaluate every configuration by CV and rank them.

    A configuration whose evaluation raises is kept on the leaderboard with
    mean -inf instead of aborting the sweep. Results are identical whatever
    `workers` is set to.
    """
    configs = configurations(spec)

    def evaluate_config(params: ElmParams) -> GridEntry:
        try:
            fold_scores = cross_validate(data, params, spec.folds, spec.seed, spec.metric)
        except FlowElmError as exc:
            return GridEntry(params, (), float("-inf"), 0.0, error=str(exc))
        arr = np.asarray(fold_scores)
        return GridEntry(params, tuple(fold_scores), float(arr.mean()), float(arr.std()))

    if workers <= 1:
        entries = [evaluate_config(c) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(evaluate_config, configs))

    leaderboard = tuple(sorted(entries, key=_leaderboard_key))
    if leaderboard[0].error is not None:
        raise DataError(
            f"every grid configuration failed; first error: {leaderboard[0].error}"
        )
    return GridResult(entries=leaderboard, best=leaderboard[0].params)
