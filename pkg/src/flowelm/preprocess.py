"""Data preparation: cleaning, labeling, feature selection, scaling, splitting.

The intended composition is clean -> select_features -> split -> fit_scaler
on the training part -> apply_scaler to both parts. Feature selection keeps
columns whose absolute correlation with the binary label clears a threshold;
scaling is a plain z-score with population (1/N) standard deviation, fitted
on training rows only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError, StratificationError
from .rng import Rng


@dataclass(frozen=True, eq=False)
class FlowDataset:
    """Feature matrix plus binary labels and column names.

    Features may contain NaN markers straight after ingestion; clean()
    removes them. Labels are always 0 (benign) or 1 (attack). `categories`
    optionally keeps the raw per-row traffic category for provenance.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    source: str = ""
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, order="C", copy=True)
        if features.ndim != 2:
            raise ShapeError("features must be 2-D")
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ShapeError("labels must be a vector")
        labels = labels.astype(np.int64)  # always copies
        if features.shape[0] != labels.shape[0]:
            raise ShapeError(
                f"{features.shape[0]} feature rows vs {labels.shape[0]} labels"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        names = tuple(self.feature_names)
        if len(names) != features.shape[1]:
            raise ShapeError(
                f"{len(names)} feature names for {features.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if self.categories is not None and len(self.categories) != labels.shape[0]:
            raise ShapeError("categories length must match the number of rows")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(self.categories))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset_rows(self, indices) -> "FlowDataset":
        indices = np.asarray(indices, dtype=np.int64)
        categories = None
        if self.categories is not None:
            categories = tuple(self.categories[i] for i in indices)
        return FlowDataset(
            features=self.features[indices],
            labels=self.labels[indices],
            feature_names=self.feature_names,
            source=self.source,
            categories=categories,
        )

    def subset_columns(self, indices) -> "FlowDataset":
        indices = list(indices)
        return FlowDataset(
            features=self.features[:, indices],
            labels=self.labels,
            feature_names=tuple(self.feature_names[i] for i in indices),
            source=self.source,
            categories=self.categories,
        )


def clean(raw: FlowDataset) -> FlowDataset:
    """Drop rows with missing values, then exact duplicates (keep first).

    Duplicate means byte-identical feature values and the same label; row
    order is otherwise preserved.
    """
    finite = np.isfinite(raw.features).all(axis=1)
    seen: set[bytes] = set()
    keep: list[int] = []
    for i in range(raw.n_samples):
        if not finite[i]:
            continue
        key = raw.features[i].tobytes() + bytes([raw.labels[i]])
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    if not keep:
        raise DataError("cleaning removed every row; dataset is empty")
    return raw.subset_rows(keep)


def binarize_labels(categories, benign_value: str = "benign") -> np.ndarray:
    """Map traffic categories to 0/1: benign (case-insensitive) is 0, anything else 1."""
    target = benign_value.strip().lower()
    labels = np.empty(len(categories), dtype=np.int64)
    for i, category in enumerate(categories):
        name = str(category).strip()
        if not name:
            raise DataError(f"row {i}: empty traffic category")
        labels[i] = 0 if name.lower() == target else 1
    return labels


@dataclass(frozen=True, eq=False)
class FeatureSelection:
    """Kept column indices plus the per-column label correlations."""

    kept_indices: tuple[int, ...]
    correlations: np.ndarray

    def __post_init__(self):
        corr = np.array(self.correlations, dtype=np.float64, copy=True)
        corr.setflags(write=False)
        object.__setattr__(self, "correlations", corr)
        object.__setattr__(self, "kept_indices", tuple(int(i) for i in self.kept_indices))


def select_features(data: FlowDataset, threshold: float = 0.02) -> FeatureSelection:
    """Keep columns whose |Pearson correlation with the label| >= threshold.

    Constant (zero-variance) columns get correlation 0 and are always
    dropped; they would break the scaler downstream.
    """
    if data.n_samples < 2:
        raise DataError("feature selection needs at least 2 rows")
    if threshold < 0:
        raise DataError("correlation threshold must be >= 0")
    if not np.isfinite(data.features).all():
        raise DataError("feature selection requires finite features; run clean() first")

    y = data.labels.astype(np.float64)
    yc = y - y.mean()
    sy = math.sqrt(float(yc @ yc) / y.size)

    x = data.features
    xc = x - x.mean(axis=0)
    sx = np.sqrt(np.einsum("ij,ij->j", xc, xc) / x.shape[0])
    cov = (xc * yc[:, None]).mean(axis=0)

    corr = np.zeros(x.shape[1])
    valid = (sx > 0) & (sy > 0)
    corr[valid] = cov[valid] / (sx[valid] * sy)

    kept = [j for j in range(x.shape[1]) if sx[j] > 0 and abs(corr[j]) >= threshold]
    if not kept:
        raise DataError(
            "no feature cleared the correlation threshold "
            f"{threshold}; lower the threshold"
        )
    return FeatureSelection(kept_indices=tuple(kept), correlations=corr)


@dataclass(frozen=True, eq=False)
class ScalerState:
    """Per-column mean and population standard deviation of the training rows."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64, copy=True)
        stds = np.array(self.stds, dtype=np.float64, copy=True)
        if means.shape != stds.shape or means.ndim != 1:
            raise ShapeError("scaler means/stds must be equal-length vectors")
        if not (stds > 0).all():
            raise DataError("scaler standard deviations must be strictly positive")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)


def fit_scaler(train_features) -> ScalerState:
    arr = np.asarray(train_features, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError("scaler input must be 2-D")
    if arr.shape[0] < 2:
        raise DataError("scaler needs at least 2 rows")
    if not np.isfinite(arr).all():
        raise DataError("scaler input must be finite")
    means = arr.mean(axis=0)
    stds = np.sqrt(((arr - means) ** 2).mean(axis=0))
    zero = np.where(stds == 0)[0]
    if zero.size:
        raise DataError(
            f"column {zero[0]} has zero variance; drop constant columns before scaling"
        )
    return ScalerState(means=means, stds=stds)


def apply_scaler(state: ScalerState, features) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError("scaler input must be 2-D")
    if arr.shape[1] != state.means.shape[0]:
        raise ShapeError(
            f"scaler fitted on {state.means.shape[0]} columns, input has {arr.shape[1]}"
        )
    return (arr - state.means) / state.stds


@dataclass(frozen=True, eq=False)
class SplitResult:
    train: FlowDataset
    test: FlowDataset


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(
    data: FlowDataset,
    train_fraction: float,
    seed: int,
    stratified: bool = True,
) -> SplitResult:
    """Seeded train/test split, stratified by class unless disabled.

    Within each class the row indices are shuffled and round(count *
    fraction) of them go to the training side. Selected indices are
    re-sorted so each side preserves the original row order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must be strictly between 0 and 1")
    rng = Rng(seed)
    train_idx: list[int] = []
    if stratified:
        for cls in (0, 1):
            idx = [int(i) for i in np.where(data.labels == cls)[0]]
            if len(idx) < 2:
                raise StratificationError(
                    f"class {cls} has {len(idx)} sample(s); stratified split needs >= 2"
                )
            rng.shuffle(idx)
            train_idx.extend(idx[: _round_half_up(len(idx) * train_fraction)])
    else:
        idx = list(range(data.n_samples))
        if len(idx) < 2:
            raise DataError("split needs at least 2 rows")
        rng.shuffle(idx)
        train_idx.extend(idx[: _round_half_up(len(idx) * train_fraction)])
    train_set = set(train_idx)
    train_sorted = sorted(train_set)
    test_sorted = [i for i in range(data.n_samples) if i not in train_set]
    return SplitResult(
        train=data.subset_rows(train_sorted),
        test=data.subset_rows(test_sorted),
    )
