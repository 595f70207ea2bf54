"""CSV ingestion, model artifact serialization, and synthetic flow generation.

CSV files are UTF-8 with a mandatory header row. Cells that fail to parse
as numbers become NaN missing markers for clean() to drop; a column where
no cell parses at all is treated as categorical and expanded into one-hot
indicator columns over its sorted value vocabulary (named "column=value").

Model artifacts are a line-oriented text format, version 1, written with 17
significant digits so every float round-trips bit-exactly. See the README
for the field-by-field description. Saves go through a temp file and an
atomic rename, so failures never leave a partial artifact behind.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .elm import Activation, ElmModel, ElmParams
from .errors import (
    DataError,
    IntegrityError,
    ParseError,
    SchemaError,
    ShapeError,
    UnsupportedVersionError,
)
from .preprocess import FeatureSelection, FlowDataset, ScalerState, binarize_labels
from .rng import Rng

FORMAT_VERSION = 1
_MAGIC = "flowelm-model"


def format_float(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class CsvSchema:
    label_column: str = "Label"
    benign_value: str = "Benign"
    delimiter: str = ","
    exclude_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.label_column:
            raise DataError("label column name must be non-empty")
        if len(self.delimiter) != 1 or not self.delimiter.isprintable():
            raise DataError("delimiter must be a single printable character")
        object.__setattr__(self, "exclude_columns", tuple(self.exclude_columns))


def _parse_cell(cell: str) -> float:
    text = cell.strip()
    if not text:
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def load_csv(path, schema: CsvSchema = CsvSchema()) -> FlowDataset:
    """Parse a labeled flow CSV into a dataset (may still contain NaN markers)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        if schema.label_column not in header:
            raise SchemaError(
                f"{path}: no {schema.label_column!r} column; header columns: {header}"
            )
        label_pos = header.index(schema.label_column)
        excluded = set(schema.exclude_columns)
        feature_pos = [
            i for i, name in enumerate(header) if i != label_pos and name not in excluded
        ]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{line_no}: expected {len(header)} cells, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")

    raw_labels = [row[label_pos] for row in rows]
    labels = binarize_labels(raw_labels, schema.benign_value)

    names: list[str] = []
    columns: list[np.ndarray] = []
    n = len(rows)
    for pos in feature_pos:
        cells = [row[pos] for row in rows]
        values = np.array([_parse_cell(c) for c in cells])
        non_empty = [c.strip() for c in cells if c.strip()]
        if non_empty and np.isnan(values).all():
            # categorical column: one-hot over the sorted vocabulary
            vocab = sorted(set(non_empty))
            for value in vocab:
                indicator = np.full(n, math.nan)
                for i, cell in enumerate(cells):
                    text = cell.strip()
                    if text:
                        indicator[i] = 1.0 if text == value else 0.0
                names.append(f"{header[pos]}={value}")
                columns.append(indicator)
        else:
            names.append(header[pos])
            columns.append(values)

    features = np.column_stack(columns) if columns else np.empty((n, 0))
    return FlowDataset(
        features=features,
        labels=labels,
        feature_names=tuple(names),
        source=str(path),
        categories=tuple(s.strip() for s in raw_labels),
    )


def write_csv(dataset: FlowDataset, path, schema: CsvSchema = CsvSchema()) -> None:
    """Write a dataset as a labeled CSV readable by load_csv."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + [schema.label_column])
        for i in range(dataset.n_samples):
            if dataset.categories is not None:
                label = dataset.categories[i]
            else:
                label = schema.benign_value if dataset.labels[i] == 0 else "Attack"
            writer.writerow(
                [format_float(v) for v in dataset.features[i]] + [label]
            )


def fingerprint(dataset: FlowDataset) -> str:
    """Content hash of the numeric payload (features plus labels)."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(dataset.features).tobytes())
    digest.update(b"|")
    digest.update(np.ascontiguousarray(dataset.labels).tobytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# model artifact (format version 1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    """Trained model plus everything needed to score raw CSV records."""

    model: ElmModel
    selection: FeatureSelection
    scaler: ScalerState
    schema: CsvSchema
    feature_names: tuple[str, ...]  # ingested feature order, pre-selection
    seed: int
    fingerprint: str = ""
    source: str = ""
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.format_version != FORMAT_VERSION:
            raise UnsupportedVersionError(
                f"artifact format {self.format_version} not supported (expected {FORMAT_VERSION})"
            )
        n_original = len(self.feature_names)
        kept = self.selection.kept_indices
        if len(self.selection.correlations) != n_original:
            raise IntegrityError("one correlation per original feature is required")
        if any(not 0 <= i < n_original for i in kept):
            raise IntegrityError("selection indices out of range")
        if len(set(kept)) != len(kept) or tuple(sorted(kept)) != kept:
            raise IntegrityError("selection indices must be sorted and unique")
        if self.scaler.means.shape[0] != len(kept):
            raise IntegrityError("scaler width must match the selected feature count")
        if self.model.n_features != len(kept):
            raise IntegrityError("model width must match the selected feature count")


def save_model(artifact: ModelArtifact, path) -> None:
    """Serialize to the versioned text format, atomically."""
    lines = [f"{_MAGIC} v{artifact.format_version}"]

    def kv(key, value):
        lines.append(f"{key}={value}")

    kv("schema.label_column", artifact.schema.label_column)
    kv("schema.benign_value", artifact.schema.benign_value)
    kv("schema.delimiter", artifact.schema.delimiter)
    kv("schema.exclude_columns", ",".join(artifact.schema.exclude_columns))
    kv("meta.seed", artifact.seed)
    kv("meta.source", artifact.source.replace("\n", " "))
    kv("meta.fingerprint", artifact.fingerprint)
    kv("selection.n_original", len(artifact.feature_names))
    kv("selection.kept", " ".join(str(i) for i in artifact.selection.kept_indices))
    kv(
        "selection.correlations",
        " ".join(format_float(c) for c in artifact.selection.correlations),
    )
    kv("scaler.means", " ".join(format_float(m) for m in artifact.scaler.means))
    kv("scaler.stds", " ".join(format_float(s) for s in artifact.scaler.stds))
    params = artifact.model.params
    kv("elm.hidden_nodes", params.hidden_nodes)
    kv("elm.activation", params.activation.value)
    kv("elm.rbf_gamma", format_float(params.rbf_gamma))
    kv("elm.seed", params.seed)
    kv("elm.n_features", artifact.model.n_features)
    for name in artifact.feature_names:
        kv("feature", name)
    for key, matrix in (
        ("input_weights", artifact.model.input_weights),
        ("biases", artifact.model.biases),
        ("output_weights", artifact.model.output_weights),
    ):
        kv(f"matrix.{key}", f"{matrix.shape[0]} {matrix.shape[1]}")
        for row in matrix:
            lines.append(" ".join(format_float(v) for v in row))
    lines.append("end")

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".flowelm-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


class _ArtifactReader:
    def __init__(self, path):
        with open(path, encoding="utf-8") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0
        self.path = path

    def next_line(self) -> str:
        if self.pos >= len(self.lines):
            raise IntegrityError(f"{self.path}: truncated artifact")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect_kv(self, key: str) -> str:
        line = self.next_line()
        prefix = key + "="
        if not line.startswith(prefix):
            raise IntegrityError(f"{self.path}: expected {key!r}, found {line!r}")
        return line[len(prefix):]


def _parse_floats(text: str, what: str, path) -> np.ndarray:
    if not text.strip():
        return np.empty(0)
    try:
        return np.array([float(tok) for tok in text.split()], dtype=np.float64)
    except ValueError:
        raise IntegrityError(f"{path}: malformed {what}") from None


def load_model(path) -> ModelArtifact:
    """Parse and validate an artifact; rejects unknown versions and bad dims."""
    reader = _ArtifactReader(path)
    magic = reader.next_line()
    if not magic.startswith(_MAGIC + " v"):
        raise IntegrityError(f"{path}: not a flowelm model file")
    try:
        version = int(magic[len(_MAGIC) + 2 :])
    except ValueError:
        raise IntegrityError(f"{path}: malformed version line") from None
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: artifact format v{version} not supported (expected v{FORMAT_VERSION})"
        )

    schema = CsvSchema(
        label_column=reader.expect_kv("schema.label_column"),
        benign_value=reader.expect_kv("schema.benign_value"),
        delimiter=reader.expect_kv("schema.delimiter"),
        exclude_columns=tuple(
            c for c in reader.expect_kv("schema.exclude_columns").split(",") if c
        ),
    )
    try:
        seed = int(reader.expect_kv("meta.seed"))
    except ValueError:
        raise IntegrityError(f"{path}: malformed seed") from None
    source = reader.expect_kv("meta.source")
    digest = reader.expect_kv("meta.fingerprint")
    try:
        n_original = int(reader.expect_kv("selection.n_original"))
    except ValueError:
        raise IntegrityError(f"{path}: malformed feature count") from None
    kept_text = reader.expect_kv("selection.kept")
    try:
        kept = tuple(int(tok) for tok in kept_text.split())
    except ValueError:
        raise IntegrityError(f"{path}: malformed selection indices") from None
    correlations = _parse_floats(
        reader.expect_kv("selection.correlations"), "correlations", path
    )
    means = _parse_floats(reader.expect_kv("scaler.means"), "scaler means", path)
    stds = _parse_floats(reader.expect_kv("scaler.stds"), "scaler stds", path)

    try:
        hidden_nodes = int(reader.expect_kv("elm.hidden_nodes"))
        activation = Activation.from_name(reader.expect_kv("elm.activation"))
        rbf_gamma = float(reader.expect_kv("elm.rbf_gamma"))
        elm_seed = int(reader.expect_kv("elm.seed"))
        n_features = int(reader.expect_kv("elm.n_features"))
    except (ValueError, DataError) as exc:
        raise IntegrityError(f"{path}: malformed model parameters: {exc}") from None

    feature_names = []
    for _ in range(n_original):
        feature_names.append(reader.expect_kv("feature"))

    matrices = {}
    for key in ("input_weights", "biases", "output_weights"):
        dims = reader.expect_kv(f"matrix.{key}").split()
        if len(dims) != 2:
            raise IntegrityError(f"{path}: malformed dimensions for {key}")
        try:
            rows, cols = int(dims[0]), int(dims[1])
        except ValueError:
            raise IntegrityError(f"{path}: malformed dimensions for {key}") from None
        data = np.empty((rows, cols))
        for r in range(rows):
            row = _parse_floats(reader.next_line(), key, path)
            if row.shape[0] != cols:
                raise IntegrityError(
                    f"{path}: {key} row {r} has {row.shape[0]} values, expected {cols}"
                )
            data[r] = row
        matrices[key] = data
    if reader.next_line() != "end":
        raise IntegrityError(f"{path}: missing end marker")

    try:
        params = ElmParams(
            hidden_nodes=hidden_nodes,
            activation=activation,
            seed=elm_seed,
            rbf_gamma=rbf_gamma,
        )
        model = ElmModel(
            input_weights=matrices["input_weights"],
            biases=matrices["biases"],
            output_weights=matrices["output_weights"],
            params=params,
            n_features=n_features,
        )
        return ModelArtifact(
            model=model,
            selection=FeatureSelection(kept_indices=kept, correlations=correlations),
            scaler=ScalerState(means=means, stds=stds),
            schema=schema,
            feature_names=tuple(feature_names),
            seed=seed,
            fingerprint=digest,
            source=source,
            format_version=version,
        )
    except (DataError, ShapeError) as exc:
        raise IntegrityError(f"{path}: inconsistent artifact: {exc}") from None


# ---------------------------------------------------------------------------
# synthetic flow generator
# ---------------------------------------------------------------------------

ATTACK_CATEGORIES = ("DDoS", "DoS", "Recon", "Spoofing", "MQTT")

# (name, benign mean, benign std, clip range). The request-rate feature is
# first so it survives any n_features truncation; every attack category
# shifts it by at least +4 benign sigmas, which keeps the two classes at
# least 3 pooled standard deviations apart for any category mix.
_FEATURES = (
    ("conn_request_rate", 4.0, 1.5, (0.0, None)),
    ("packet_size_mean", 520.0, 180.0, (1.0, None)),
    ("inter_arrival_ms", 120.0, 40.0, (0.0, None)),
    ("distinct_ports", 3.0, 1.2, (0.0, None)),
    ("mqtt_publish_rate", 1.5, 0.6, (0.0, None)),
    ("addr_consistency", 0.97, 0.01, (0.0, 1.0)),
    ("port_entropy", 0.9, 0.35, (0.0, None)),
    ("flow_duration_s", 8.0, 3.0, (0.0, None)),
    ("packet_size_std", 90.0, 30.0, (0.0, None)),
    ("inter_arrival_jitter", 25.0, 8.0, (0.0, None)),
)

# mean shifts per category, in units of the benign std
_SHIFTS = {
    "DDoS": {
        "conn_request_rate": 6.0,
        "inter_arrival_ms": -2.5,
        "packet_size_std": 2.0,
        "flow_duration_s": -1.5,
    },
    "DoS": {
        "conn_request_rate": 6.0,
        "inter_arrival_ms": -2.0,
        "packet_size_mean": -1.5,
    },
    "Recon": {
        "conn_request_rate": 4.0,
        "distinct_ports": 6.0,
        "port_entropy": 4.0,
    },
    "Spoofing": {
        "conn_request_rate": 4.0,
        "addr_consistency": -8.0,
        "inter_arrival_jitter": 2.0,
    },
    "MQTT": {
        "conn_request_rate": 4.0,
        "mqtt_publish_rate": 6.0,
        "packet_size_mean": 1.0,
    },
}

_TCP_PROBABILITY = {"benign": 0.7, "DDoS": 0.45, "DoS": 0.45, "Recon": 0.6, "Spoofing": 0.6, "MQTT": 0.6}


def _default_mix() -> dict[str, float]:
    return {name: 1.0 / len(ATTACK_CATEGORIES) for name in ATTACK_CATEGORIES}


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    n_benign: int = 2000
    n_attack: int = 2000
    attack_mix: dict[str, float] = field(default_factory=_default_mix)
    seed: int = 7
    n_features: int = 12

    def __post_init__(self):
        if self.n_benign < 0 or self.n_attack < 0:
            raise DataError("sample counts must be non-negative")
        if self.n_benign + self.n_attack < 2:
            raise DataError("generator needs at least 2 samples in total")
        if self.n_features < 1:
            raise DataError("n_features must be >= 1")
        mix = dict(self.attack_mix)
        unknown = sorted(set(mix) - set(ATTACK_CATEGORIES))
        if unknown:
            raise DataError(f"invalid attack mix: unknown categories {unknown}")
        if any(w < 0 for w in mix.values()):
            raise DataError("invalid attack mix: weights must be non-negative")
        if abs(sum(mix.values()) - 1.0) > 1e-9:
            raise DataError("invalid attack mix: weights must sum to 1")
        object.__setattr__(self, "attack_mix", mix)


def _category_counts(spec: SyntheticSpec) -> list[tuple[str, int]]:
    # largest-remainder apportionment in fixed category order
    quotas = [
        (name, spec.attack_mix.get(name, 0.0) * spec.n_attack)
        for name in ATTACK_CATEGORIES
    ]
    counts = {name: int(math.floor(quota)) for name, quota in quotas}
    leftover = spec.n_attack - sum(counts.values())
    remainders = sorted(
        quotas, key=lambda item: (-(item[1] - math.floor(item[1])), ATTACK_CATEGORIES.index(item[0]))
    )
    for name, _ in remainders[:leftover]:
        counts[name] += 1
    return [(name, counts[name]) for name in ATTACK_CATEGORIES]


def _feature_plan(n_features: int):
    """Feature names plus per-feature generation parameters."""
    plan = []
    for name, mean, std, clip in _FEATURES[: min(n_features, len(_FEATURES))]:
        plan.append(("gauss", name, mean, std, clip))
    remaining = n_features - len(plan)
    if remaining >= 1:
        plan.append(("proto_tcp", "proto_tcp", 0.0, 0.0, None))
        remaining -= 1
    if remaining >= 1:
        plan.append(("proto_udp", "proto_udp", 0.0, 0.0, None))
        remaining -= 1
    for extra in range(remaining):
        plan.append(("noise", f"noise_{extra}", 0.0, 1.0, None))
    return plan


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> FlowDataset:
    """Deterministic labeled flows: a benign baseline plus shifted attack rows.

    Rows come out benign block first, then attack categories in fixed
    order; values are drawn row-major from a single seeded stream.
    """
    plan = _feature_plan(spec.n_features)
    rng = Rng(spec.seed)
    groups = [("Benign", spec.n_benign)] + _category_counts(spec)

    rows = []
    categories = []
    for category, count in groups:
        shifts = _SHIFTS.get(category, {})
        for _ in range(count):
            row = np.empty(len(plan))
            tcp = None
            for j, (kind, name, mean, std, clip) in enumerate(plan):
                if kind == "gauss":
                    shifted = mean + shifts.get(name, 0.0) * std
                    value = rng.normal(shifted, std)
                    if clip is not None:
                        low, high = clip
                        if low is not None:
                            value = max(low, value)
                        if high is not None:
                            value = min(high, value)
                elif kind == "proto_tcp":
                    p = _TCP_PROBABILITY["benign" if category == "Benign" else category]
                    tcp = 1.0 if rng.random() < p else 0.0
                    value = tcp
                elif kind == "proto_udp":
                    value = 1.0 - tcp  # complement; always follows proto_tcp in the plan
                else:  # uninformative noise column
                    value = rng.normal(0.0, 1.0)
                row[j] = value
            rows.append(row)
            categories.append(category)

    features = np.vstack(rows) if rows else np.empty((0, len(plan)))
    labels = np.array([0 if c == "Benign" else 1 for c in categories], dtype=np.int64)
    mix_text = ",".join(
        f"{name}:{format_float(weight)}" for name, weight in sorted(spec.attack_mix.items())
    )
    source = (
        f"synthetic(seed={spec.seed}, benign={spec.n_benign}, "
        f"attack={spec.n_attack}, mix={mix_text})"
    )
    return FlowDataset(
        features=features,
        labels=labels,
        feature_names=tuple(name for _, name, _, _, _ in plan),
        source=source,
        categories=tuple(categories),
    )
