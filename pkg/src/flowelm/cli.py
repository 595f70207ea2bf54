"""Command line for the full pipeline: synth, train, grid, evaluate, score.

Every sub-command is deterministic given its flags; repeated runs produce
byte-identical artifacts and reports. Exit codes: 0 success, 1 usage,
2 data/schema problems, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import dataio, metrics, model_select, preprocess
from . import elm as elm_mod
from .elm import Activation, ElmParams
from .errors import DataError, NumericError, SchemaError, ShapeError
from .metrics import EvalReport

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _StageFailure(SystemExit):
    pass


def _fail(code: int, stage: str, message: str):
    print(f"flowelm: {stage}: {message}", file=sys.stderr)
    raise _StageFailure(code)


def _stage(stage: str, fn, *args, **kwargs):
    """Run one pipeline stage, converting errors to coded exits."""
    try:
        return fn(*args, **kwargs)
    except FileNotFoundError as exc:
        _fail(EXIT_DATA, stage, f"file not found: {exc.filename}")
    except NumericError as exc:
        _fail(EXIT_NUMERIC, stage, str(exc))
    except (DataError, ShapeError) as exc:
        _fail(EXIT_DATA, stage, str(exc))
    except OSError as exc:
        _fail(EXIT_DATA, stage, str(exc))


@dataclass(frozen=True)
class PipelineConfig:
    corr_threshold: float = 0.02
    train_fraction: float = 0.8
    seed: int = 0
    leak_free: bool = False


# ---------------------------------------------------------------------------
# report formatting
# ---------------------------------------------------------------------------


def format_report(report: EvalReport) -> str:
    """Machine-readable key=value report with a 2x2 confusion block.

    Confusion rows are actual (attack first), columns predicted (attack
    first): first row "tp fn", second row "fp tn".
    """
    f = dataio.format_float
    cm = report.confusion
    lines = [
        "flowelm-report v1",
        f"n_samples={report.n_samples}",
        f"threshold={f(report.threshold)}",
        f"tp={cm.tp}",
        f"fp={cm.fp}",
        f"tn={cm.tn}",
        f"fn={cm.fn}",
        f"accuracy={f(report.accuracy)}",
        f"precision={f(report.precision)}",
        f"recall={f(report.recall)}",
        f"f1={f(report.f1)}",
        f"auc_roc={f(report.auc_roc)}",
        f"neg_precision={f(report.neg_precision)}",
        f"neg_recall={f(report.neg_recall)}",
        f"degenerate={1 if report.degenerate else 0}",
        "confusion:",
        f"{cm.tp} {cm.fn}",
        f"{cm.fp} {cm.tn}",
        "end",
    ]
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".flowelm-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_report(report))
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def display_summary(report: EvalReport, out=None) -> None:
    """Human-readable two-decimal summary table."""
    out = out or sys.stdout
    cm = report.confusion
    print(f"Test results (n={report.n_samples}, threshold {report.threshold:.2f}):", file=out)
    print(f"  Accuracy    {100.0 * report.accuracy:.2f}%", file=out)
    print(f"  Precision   {report.precision:.2f}", file=out)
    print(f"  Recall      {report.recall:.2f}", file=out)
    print(f"  F1-score    {report.f1:.2f}", file=out)
    print(f"  AUC-ROC     {report.auc_roc:.3f}", file=out)
    width = max(len(str(v)) for v in (cm.tp, cm.fp, cm.tn, cm.fn))
    print("Confusion matrix (rows actual, columns predicted; attack first):", file=out)
    print(f"  attack  {cm.tp:>{width}}  {cm.fn:>{width}}", file=out)
    print(f"  benign  {cm.fp:>{width}}  {cm.tn:>{width}}", file=out)


# ---------------------------------------------------------------------------
# shared pipeline steps
# ---------------------------------------------------------------------------


def _schema_from_args(args, base: dataio.CsvSchema | None = None) -> dataio.CsvSchema:
    base = base or dataio.CsvSchema()
    exclude = base.exclude_columns
    if getattr(args, "exclude_columns", None) is not None:
        exclude = tuple(c for c in args.exclude_columns.split(",") if c)
    return dataio.CsvSchema(
        label_column=getattr(args, "label_column", None) or base.label_column,
        benign_value=getattr(args, "benign_value", None) or base.benign_value,
        delimiter=getattr(args, "delimiter", None) or base.delimiter,
        exclude_columns=exclude,
    )


@dataclass(frozen=True, eq=False)
class PreparedData:
    data: preprocess.FlowDataset  # cleaned, all ingested columns
    selection: preprocess.FeatureSelection
    train: preprocess.FlowDataset  # selected columns, unscaled
    test: preprocess.FlowDataset


def prepare(data: preprocess.FlowDataset, cfg: PipelineConfig) -> PreparedData:
    """Split rows, then select features from the full data (or, leak-free,
    from the training rows only) and restrict both sides to them."""
    split_result = _stage(
        "split", preprocess.split, data, cfg.train_fraction, cfg.seed
    )
    selection_source = split_result.train if cfg.leak_free else data
    selection = _stage(
        "select-features", preprocess.select_features, selection_source, cfg.corr_threshold
    )
    return PreparedData(
        data=data,
        selection=selection,
        train=split_result.train.subset_columns(selection.kept_indices),
        test=split_result.test.subset_columns(selection.kept_indices),
    )


def _fit_and_evaluate(prepared: PreparedData, params: ElmParams, threshold: float):
    scaler = _stage("fit-scaler", preprocess.fit_scaler, prepared.train.features)
    x_train = preprocess.apply_scaler(scaler, prepared.train.features)
    x_test = preprocess.apply_scaler(scaler, prepared.test.features)
    model = _stage("train", elm_mod.fit, x_train, prepared.train.labels, params)
    test_ds = preprocess.FlowDataset(
        features=x_test,
        labels=prepared.test.labels,
        feature_names=prepared.train.feature_names,
        source=prepared.test.source,
    )
    report = _stage("evaluate", metrics.evaluate, model, test_ds, threshold)
    return model, scaler, report


def _build_artifact(args, prepared: PreparedData, model, scaler, schema) -> dataio.ModelArtifact:
    return dataio.ModelArtifact(
        model=model,
        selection=prepared.selection,
        scaler=scaler,
        schema=schema,
        feature_names=prepared.data.feature_names,
        seed=args.seed,
        fingerprint=dataio.fingerprint(prepared.data),
        source=prepared.data.source,
    )


def _emit_outputs(args, artifact, report) -> None:
    _stage("save", dataio.save_model, artifact, args.model)
    report_path = args.report or f"{args.model}.report.txt"
    _stage("report", write_report, report, report_path)
    print(f"model -> {args.model}")
    print(f"report -> {report_path}")
    display_summary(report)


# ---------------------------------------------------------------------------
# sub-commands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    schema = _schema_from_args(args)
    raw = _stage("load", dataio.load_csv, args.input, schema)
    data = _stage("clean", preprocess.clean, raw)
    cfg = PipelineConfig(
        corr_threshold=args.corr_threshold,
        train_fraction=args.train_fraction,
        seed=args.seed,
        leak_free=args.leak_free,
    )
    prepared = prepare(data, cfg)
    params = ElmParams(
        hidden_nodes=args.hidden,
        activation=Activation.from_name(args.activation),
        seed=args.seed,
        rbf_gamma=args.rbf_gamma,
    )
    model, scaler, report = _fit_and_evaluate(prepared, params, args.threshold)
    artifact = _build_artifact(args, prepared, model, scaler, schema)
    _emit_outputs(args, artifact, report)
    return 0


def _format_grid_line(entry: model_select.GridEntry) -> str:
    p = entry.params
    head = f"hidden={p.hidden_nodes:<5d} activation={p.activation.value:<8s}"
    if p.activation is Activation.RBF:
        head += f" gamma={p.rbf_gamma:g}"
    if entry.error is not None:
        return f"{head} FAILED: {entry.error}"
    return f"{head} mean={entry.mean:.4f} std={entry.std:.4f}"


def cmd_grid(args) -> int:
    schema = _schema_from_args(args)
    raw = _stage("load", dataio.load_csv, args.input, schema)
    data = _stage("clean", preprocess.clean, raw)
    cfg = PipelineConfig(
        corr_threshold=args.corr_threshold,
        train_fraction=args.train_fraction,
        seed=args.seed,
        leak_free=args.leak_free,
    )
    prepared = prepare(data, cfg)
    try:
        spec = model_select.GridSpec(
            hidden_nodes=args.hidden,
            activations=tuple(Activation.from_name(a) for a in args.activation),
            rbf_gammas=args.rbf_gamma,
            folds=args.folds,
            seed=args.seed,
            metric=args.metric,
        )
    except DataError as exc:
        _fail(EXIT_USAGE, "grid", str(exc))
    result = _stage("grid-search", model_select.grid_search, prepared.train, spec)
    print(f"Grid leaderboard ({spec.metric}, {spec.folds}-fold CV, best first):")
    for entry in result.entries:
        print(f"  {_format_grid_line(entry)}")
    model, scaler, report = _fit_and_evaluate(prepared, result.best, args.threshold)
    artifact = _build_artifact(args, prepared, model, scaler, schema)
    _emit_outputs(args, artifact, report)
    return 0


def _apply_artifact(artifact: dataio.ModelArtifact, features: np.ndarray) -> np.ndarray:
    selected = features[:, list(artifact.selection.kept_indices)]
    return preprocess.apply_scaler(artifact.scaler, selected)


def cmd_evaluate(args) -> int:
    artifact = _stage("load-model", dataio.load_model, args.model)
    schema = _schema_from_args(args, base=artifact.schema)
    try:
        raw = dataio.load_csv(args.input, schema)
    except FileNotFoundError as exc:
        _fail(EXIT_DATA, "load", f"file not found: {exc.filename}")
    except SchemaError as exc:
        _fail(
            EXIT_DATA,
            "load",
            f"{exc} (evaluate needs a labeled CSV; use 'flowelm score' for unlabeled records)",
        )
    except DataError as exc:
        _fail(EXIT_DATA, "load", str(exc))
    if raw.feature_names != artifact.feature_names:
        _fail(
            EXIT_DATA,
            "schema",
            "feature columns do not match the model artifact\n"
            f"  artifact: {list(artifact.feature_names)}\n"
            f"  input:    {list(raw.feature_names)}",
        )
    finite = np.isfinite(raw.features).all(axis=1)
    skipped = int(raw.n_samples - finite.sum())
    if skipped:
        print(f"flowelm: evaluate: skipped {skipped} record(s) with missing values", file=sys.stderr)
    usable = raw.subset_rows(np.where(finite)[0])
    if usable.n_samples == 0:
        _fail(EXIT_DATA, "evaluate", "no usable records after dropping missing values")
    x = _apply_artifact(artifact, usable.features)
    test_ds = preprocess.FlowDataset(
        features=x,
        labels=usable.labels,
        feature_names=tuple(artifact.feature_names[i] for i in artifact.selection.kept_indices),
        source=usable.source,
    )
    report = _stage("evaluate", metrics.evaluate, artifact.model, test_ds, args.threshold)
    sys.stdout.write(format_report(report))
    display_summary(report)
    if args.report:
        _stage("report", write_report, report, args.report)
        print(f"report -> {args.report}")
    return 0


def cmd_score(args) -> int:
    artifact = _stage("load-model", dataio.load_model, args.model)
    expected = list(artifact.feature_names)
    delimiter = artifact.schema.delimiter
    n_original = len(expected)
    kept = list(artifact.selection.kept_indices)

    if args.input == "-":
        stream = sys.stdin
        close = False
    else:
        try:
            stream = open(args.input, encoding="utf-8")
        except FileNotFoundError as exc:
            _fail(EXIT_DATA, "score", f"file not found: {exc.filename}")
        close = True

    header_with_label = expected + [artifact.schema.label_column]
    ordinal = 0
    warnings = 0
    label_suffix = False
    first = True
    try:
        for line in stream:
            line = line.rstrip("\r\n")
            if not line:
                continue
            cells = [c.strip() for c in line.split(delimiter)]
            if first:
                first = False
                if cells == expected:
                    continue
                if cells == header_with_label:
                    label_suffix = True
                    continue
            want = n_original + (1 if label_suffix else 0)
            if len(cells) != want:
                print(f"{ordinal},ERROR,expected {want} fields, got {len(cells)}")
                warnings += 1
                ordinal += 1
                continue
            try:
                values = [float(c) for c in cells[:n_original]]
            except ValueError:
                print(f"{ordinal},ERROR,unparseable numeric field")
                warnings += 1
                ordinal += 1
                continue
            row = np.array(values)[kept].reshape(1, -1)
            scaled = preprocess.apply_scaler(artifact.scaler, row)
            value = float(elm_mod.score(artifact.model, scaled)[0])
            label = 1 if value >= args.threshold else 0
            print(f"{ordinal},{dataio.format_float(value)},{label}", flush=True)
            ordinal += 1
    finally:
        if close:
            stream.close()
    if warnings:
        print(f"flowelm: score: {warnings} malformed record(s) skipped", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    mix = None
    if args.mix:
        mix = {}
        for part in args.mix.split(","):
            if "=" not in part:
                _fail(EXIT_USAGE, "synth", f"bad mix entry {part!r}; expected NAME=WEIGHT")
            name, _, weight = part.partition("=")
            try:
                mix[name.strip()] = float(weight)
            except ValueError:
                _fail(EXIT_USAGE, "synth", f"bad mix weight in {part!r}")
    try:
        spec = dataio.SyntheticSpec(
            n_benign=args.benign,
            n_attack=args.attack,
            attack_mix=mix if mix is not None else dataio._default_mix(),
            seed=args.seed,
            n_features=args.features,
        )
    except DataError as exc:
        _fail(EXIT_USAGE, "synth", str(exc))
    dataset = dataio.generate_synthetic(spec)
    _stage("write", dataio.write_csv, dataset, args.out)
    print(f"wrote {dataset.n_samples} rows ({args.benign} benign, {args.attack} attack) -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_schema_flags(parser):
    parser.add_argument("--label-column", default=None, help="label column name (default Label)")
    parser.add_argument("--benign-value", default=None, help="label value treated as benign (default Benign)")
    parser.add_argument("--delimiter", default=None, help="CSV delimiter (default ,)")
    parser.add_argument("--exclude-columns", default=None, help="comma-separated columns to ignore")


def _add_pipeline_flags(parser):
    parser.add_argument("--corr-threshold", type=float, default=0.02,
                        help="minimum |correlation| with the label to keep a feature")
    parser.add_argument("--train-fraction", type=float, default=0.8,
                        help="fraction of rows used for training")
    parser.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    parser.add_argument("--leak-free", action="store_true",
                        help="select features from the training split only")
    parser.add_argument("--threshold", type=float, default=0.5, help="decision threshold")


def _comma_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _comma_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _comma_names(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flowelm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model on a labeled CSV", parents=[])
    p_train.add_argument("--config", default=None, help="optional key=value defaults file")
    p_train.add_argument("--input", required=True, help="labeled flow CSV")
    p_train.add_argument("--model", required=True, help="output model artifact path")
    p_train.add_argument("--report", default=None, help="output report path (default MODEL.report.txt)")
    _add_schema_flags(p_train)
    _add_pipeline_flags(p_train)
    p_train.add_argument("--hidden", type=int, default=64, help="hidden node count")
    p_train.add_argument("--activation", default="tanh", choices=["tanh", "sigmoid", "rbf"])
    p_train.add_argument("--rbf-gamma", type=float, default=1.0, help="RBF kernel width")
    p_train.set_defaults(func=cmd_train)

    p_grid = sub.add_parser("grid", help="cross-validated grid search, then train the best")
    p_grid.add_argument("--config", default=None, help="optional key=value defaults file")
    p_grid.add_argument("--input", required=True, help="labeled flow CSV")
    p_grid.add_argument("--model", required=True, help="output model artifact path")
    p_grid.add_argument("--report", default=None, help="output report path (default MODEL.report.txt)")
    _add_schema_flags(p_grid)
    _add_pipeline_flags(p_grid)
    p_grid.add_argument("--hidden", type=_comma_ints,
                        default=list(model_select.DEFAULT_HIDDEN_NODES),
                        help="comma-separated hidden node candidates")
    p_grid.add_argument("--activation", type=_comma_names, default=["tanh", "sigmoid", "rbf"],
                        help="comma-separated activation candidates")
    p_grid.add_argument("--rbf-gamma", type=_comma_floats, default=[1.0],
                        help="comma-separated RBF gamma candidates")
    p_grid.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    p_grid.add_argument("--metric", default="f1", choices=["f1", "accuracy"],
                        help="selection metric")
    p_grid.set_defaults(func=cmd_grid)

    p_eval = sub.add_parser("evaluate", help="evaluate a saved model on a labeled CSV")
    p_eval.add_argument("--config", default=None, help="optional key=value defaults file")
    p_eval.add_argument("--model", required=True, help="model artifact path")
    p_eval.add_argument("--input", required=True, help="labeled flow CSV")
    p_eval.add_argument("--report", default=None, help="optional report output path")
    p_eval.add_argument("--threshold", type=float, default=0.5, help="decision threshold")
    _add_schema_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_score = sub.add_parser("score", help="stream verdicts for CSV records")
    p_score.add_argument("--config", default=None, help="optional key=value defaults file")
    p_score.add_argument("--model", required=True, help="model artifact path")
    p_score.add_argument("--input", default="-", help="records file, or - for stdin (default)")
    p_score.add_argument("--threshold", type=float, default=0.5, help="decision threshold")
    p_score.set_defaults(func=cmd_score)

    p_synth = sub.add_parser("synth", help="generate a synthetic labeled flow CSV")
    p_synth.add_argument("--config", default=None, help="optional key=value defaults file")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--benign", type=int, default=2000, help="benign row count")
    p_synth.add_argument("--attack", type=int, default=2000, help="attack row count")
    p_synth.add_argument("--features", type=int, default=12, help="feature column count")
    p_synth.add_argument("--seed", type=int, default=7, help="generator seed")
    p_synth.add_argument("--mix", default=None,
                         help="attack mix as NAME=WEIGHT pairs, comma-separated")
    p_synth.set_defaults(func=cmd_synth)

    return parser


_CONFIG_BOOLEAN_KEYS = {"leak_free"}


def _apply_config_file(parser, argv):
    """Pre-scan for --config and install its key=value pairs as defaults."""
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return
    if not os.path.exists(path):
        parser.error(f"config file not found: {path}")
    defaults = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                parser.error(f"bad config line {line!r}; expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key in _CONFIG_BOOLEAN_KEYS:
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
    for action_parser in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest: a for a in action_parser._actions}
        usable = {}
        for key, value in defaults.items():
            if key not in known:
                continue
            action = known[key]
            if isinstance(value, str) and action.type is not None:
                try:
                    value = action.type(value)
                except (TypeError, ValueError):
                    parser.error(f"bad config value for {key}: {value!r}")
            usable[key] = value
        action_parser.set_defaults(**usable)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)

    # usage-level validation beyond argparse types
    if getattr(args, "folds", None) is not None and args.folds < 2:
        parser.error("--folds must be at least 2")
    if getattr(args, "train_fraction", None) is not None and not 0 < args.train_fraction < 1:
        parser.error("--train-fraction must be strictly between 0 and 1")
    if getattr(args, "corr_threshold", None) is not None and args.corr_threshold < 0:
        parser.error("--corr-threshold must be >= 0")
    if getattr(args, "hidden", None) is not None:
        hidden = args.hidden if isinstance(args.hidden, list) else [args.hidden]
        if not hidden or any(h < 1 for h in hidden):
            parser.error("--hidden values must be >= 1")
        if isinstance(args.hidden, list):
            args.hidden = tuple(hidden)
    if getattr(args, "rbf_gamma", None) is not None:
        gammas = args.rbf_gamma if isinstance(args.rbf_gamma, list) else [args.rbf_gamma]
        if not gammas or any(g <= 0 for g in gammas):
            parser.error("--rbf-gamma values must be positive")
        if isinstance(args.rbf_gamma, list):
            args.rbf_gamma = tuple(gammas)

    try:
        return args.func(args)
    except _StageFailure as exc:
        return exc.code
    except BrokenPipeError:
        # downstream consumer (head, etc.) closed the pipe; not an error
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
