"""Command-line interface: ``bootauc <command> ...``.

Every command writes comma-separated outputs plus ``manifest.json``, which
records the resolved settings so ``bootauc replay manifest.json`` rebuilds
identical tables.
"""

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import InvalidInputError
from .bootstrap import ReplicateFits
from .discriminant import make_classifier
from .estimator import REPORT_COLUMNS, BootstrapPerformance
from .resampling import LabeledDataset
from .simulation import (
    AGGREGATE_COLUMNS,
    COMPARISON_SUMMARY_COLUMNS,
    COMPARISON_TRIAL_COLUMNS,
    SUPPORT_COLUMNS,
    ExperimentConfig,
    TrialFailure,
    average_rms,
    compare_classifiers,
    gen_multinormal,
    run_mc_experiment,
    run_size_series,
    support_size_study,
    trial_streams,
)
from .smoothness import decision_surfaces, default_grid, feature_sweep, smoothness_metric

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRIAL = 3

_SECTION = "experiment"

# keys accepted in config files beyond the ExperimentConfig fields
_EXTRA_KEYS = {
    "jobs": int,
    "series": bool,
    "case": int,
    "coordinate": int,
    "grid_points": int,
    "grid_width": float,
    "include_auc": bool,
    "full_scale": bool,
}

FULL_SCALE_TRIALS = 1000

_SMOOTHNESS_DEFAULTS = {"p": 2, "B": 1000, "metric": "error"}


class CliError(Exception):
    pass


# Input parsing


def read_dataset(path):
    """Parse a CSV with a header, a ``label`` column (1 or 2), then features."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(f"cannot read dataset {path}: {exc.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CliError(f"{path}: empty file, expected a header row")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != "label":
        raise CliError(f"{path}, line 1: header must be 'label' followed by feature names")
    p = len(header) - 1
    labels, features = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != p + 1:
            raise CliError(f"{path}, line {lineno}: expected {p + 1} fields, found {len(row)}")
        label = row[0].strip()
        if label not in ("1", "2"):
            raise CliError(f"{path}, line {lineno}: label must be 1 or 2, got {label!r}")
        try:
            values = [float(c) for c in row[1:]]
        except ValueError:
            raise CliError(f"{path}, line {lineno}: non-numeric feature value") from None
        if not all(math.isfinite(v) for v in values):
            raise CliError(f"{path}, line {lineno}: feature values must be finite")
        labels.append(int(label))
        features.append(values)
    for k in (1, 2):
        if k not in labels:
            raise CliError(f"{path}: class {k} is absent")
    return LabeledDataset(np.array(features), np.array(labels))


def _convert(key, raw, kind):
    raw = raw.strip()
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind is tuple:
            return tuple(int(v) for v in raw.replace(",", " ").split())
        if kind == "optional_float":
            return None if raw.lower() in ("", "none") else float(raw)
        return kind(raw)
    except ValueError:
        raise CliError(f"config field '{key}': cannot parse {raw!r}") from None


def _config_types():
    types = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "c":
            types[f.name] = "optional_float"
        elif f.name == "sizes":
            types[f.name] = tuple
        else:
            types[f.name] = type(f.default)
    return types


def read_config(path):
    """Flat ``key = value`` file (an optional ``[experiment]`` header is allowed)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    if not text.lstrip().startswith("["):
        text = f"[{_SECTION}]\n" + text
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise CliError(f"config {path}: {exc.message.splitlines()[0]}") from None
    if parser.sections() != [_SECTION]:
        raise CliError(f"config {path}: expected a single [{_SECTION}] section")
    types = {**_config_types(), **_EXTRA_KEYS}
    out = {}
    for key, raw in parser[_SECTION].items():
        if key not in types:
            raise CliError(f"config field '{key}' is not recognised")
        out[key] = _convert(key, raw, types[key])
    return out


def build_config(values, overrides, defaults=None):
    """Split raw settings into an ExperimentConfig and the extra options."""
    values = {**(defaults or {}), **values}
    if values.get("full_scale") and "trials" not in values:
        values["trials"] = FULL_SCALE_TRIALS
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    extras = {k: values.pop(k) for k in list(values) if k in _EXTRA_KEYS}
    try:
        config = ExperimentConfig(**values)
    except InvalidInputError as exc:
        raise CliError(str(exc)) from None
    return config, extras


# Output


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return value
    raise CliError(f"cannot write value of type {type(value).__name__} to CSV")


def check_table(columns, rows):
    """Validate a table against its declared header before it is written."""
    columns = list(columns)
    if not columns or len(set(columns)) != len(columns):
        raise CliError(f"invalid CSV header {columns}")
    for r, row in enumerate(rows):
        if len(row) != len(columns):
            raise CliError(f"row {r} has {len(row)} cells, header declares {len(columns)}")
        for value in row:
            _cell(value)


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path, columns, rows):
    check_table(columns, rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([[_cell(v) for v in row] for row in rows])
    _atomic_write(path, buf.getvalue())
    return path


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command, settings, outputs, started):
    manifest = {
        "command": command,
        "seed": settings.get("seed", settings.get("config", {}).get("seed")),
        "settings": settings,
        "version": __version__,
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    path = Path(out_dir) / "manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# Commands (each takes resolved settings and returns output paths)


def run_estimate(settings, out_dir):
    data = read_dataset(settings["dataset"])
    trainer = make_classifier(settings["classifier"])
    est = BootstrapPerformance(trainer, n_bootstrap=settings["B"], threshold=settings["threshold"],
                               random_state=settings["seed"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = est.fit(data.X, data.y).report()
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(out_dir)
    diag_rows = [[k, v] for k, v in sorted(report.diagnostics.items())]
    return [
        write_table(out / "estimates.csv", REPORT_COLUMNS, report.rows()),
        write_table(out / "diagnostics.csv", ("diagnostic", "value"), diag_rows),
    ]


def _report_tables(out, report, suffix=""):
    return [
        write_table(out / f"trials{suffix}.csv", report.trial_columns, report.trial_rows()),
        write_table(out / f"aggregate{suffix}.csv", AGGREGATE_COLUMNS, report.aggregate_rows()),
    ]


def run_simulate(settings, out_dir):
    config, extras = build_config(settings["config"], {})
    out = Path(out_dir)
    jobs = settings.get("jobs", 1)
    if not extras.get("series"):
        return _report_tables(out, run_mc_experiment(config, jobs))
    reports = run_size_series(config, config.sizes, jobs)
    paths = []
    for n, report in reports.items():
        paths += _report_tables(out, report, f"_n{n}")
    avg = average_rms(reports.values())
    paths.append(write_table(out / "average_rms.csv", ("estimator", "average_rms"),
                             [[k, v] for k, v in avg.items()]))
    return paths


def run_smoothness(settings, out_dir):
    config, extras = build_config(settings["config"], {}, _SMOOTHNESS_DEFAULTS)
    data_rng, boot_rng, _ = trial_streams(config.seed, 0)
    data = gen_multinormal(config, data_rng)
    case = extras.get("case", 0)
    coordinate = extras.get("coordinate", 0)
    points = extras.get("grid_points", 50)
    width = extras.get("grid_width", 3.0)
    if points < 2:
        raise CliError("config field 'grid_points' must be >= 2")
    if not 0 <= coordinate < data.p:
        raise CliError(f"config field 'coordinate' must be in [0, {data.p - 1}]")
    grid = default_grid(data, coordinate, points, width)
    trainer = make_classifier(config.classifier)
    fits = ReplicateFits.draw(data, trainer, config.B, boot_rng, keep_models=True)
    try:
        sweep = feature_sweep(data, trainer, case, coordinate, grid, threshold=config.threshold,
                              include_auc=extras.get("include_auc", False), fits=fits)
    except InvalidInputError as exc:
        raise CliError(str(exc)) from None
    out = Path(out_dir)
    paths = [write_table(out / "sweep.csv", sweep.columns, sweep.rows())]
    metrics = []
    for name, curve in sweep.curves.items():
        m = smoothness_metric(curve)
        metrics.append([name, m.max_jump, m.jump_count])
    paths.append(write_table(out / "smoothness.csv", ("curve", "max_jump", "jump_count"), metrics))
    if hasattr(fits.models[0], "coef_"):
        rows = [list(r) for r in decision_surfaces(data, trainer, fits, k=5)]
        cols = ["surface", "intercept", *(f"coef_{j}" for j in range(data.p))]
        paths.append(write_table(out / "surfaces.csv", cols, rows))
    return paths


def run_compare(settings, out_dir):
    config, extras = build_config(settings["config"], {})
    report = compare_classifiers(config, settings.get("jobs", 1))
    out = Path(out_dir)
    return [
        write_table(out / "comparison_trials.csv", COMPARISON_TRIAL_COLUMNS, report.trial_rows()),
        write_table(out / "comparison_summary.csv", COMPARISON_SUMMARY_COLUMNS, report.summary_rows()),
    ]


def run_support(settings, out_dir):
    config, extras = build_config(settings["config"], {})
    rows = support_size_study(config, jobs=settings.get("jobs", 1))
    return [write_table(Path(out_dir) / "support.csv", SUPPORT_COLUMNS, rows)]


_RUNNERS = {
    "estimate": run_estimate,
    "simulate": run_simulate,
    "smoothness": run_smoothness,
    "compare": run_compare,
    "support-study": run_support,
}


def _resolve(args):
    """Turn parsed arguments into the settings stored in the manifest."""
    if args.command == "estimate":
        dataset = Path(args.dataset).resolve()
        return {
            "dataset": str(dataset),
            "dataset_sha256": _sha256(dataset) if dataset.exists() else None,
            "classifier": args.classifier,
            "B": args.B if args.B is not None else 100,
            "seed": args.seed if args.seed is not None else 0,
            "threshold": args.threshold,
        }
    values = read_config(args.config) if args.config else {}
    for key in ("seed", "B", "trials"):
        value = getattr(args, key)
        if value is not None:
            values[key] = value
    jobs = args.jobs if args.jobs is not None else values.pop("jobs", 1)
    values.pop("jobs", None)
    defaults = _SMOOTHNESS_DEFAULTS if args.command == "smoothness" else None
    config, extras = build_config(values, {}, defaults)  # validates early
    resolved = {**config.to_dict(), **extras}
    return {"config": resolved, "jobs": int(jobs)}


def execute(command, settings, out_dir):
    started = time.time()
    runner = _RUNNERS[command]
    cfg = settings.get("config")
    if cfg is not None:
        settings = {**settings, "config": {**cfg, "sizes": tuple(cfg["sizes"])}}
    outputs = runner(settings, out_dir)
    stored = json.loads(json.dumps(settings, default=list))
    return write_manifest(out_dir, command, stored, outputs, started), outputs


def replay(manifest_path, out_dir=None):
    """Rerun the command recorded in a manifest."""
    try:
        manifest = json.loads(Path(manifest_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read manifest {manifest_path}: {exc}") from None
    command = manifest.get("command")
    if command not in _RUNNERS:
        raise CliError(f"manifest names unknown command {command!r}")
    settings = manifest["settings"]
    if command == "estimate" and settings.get("dataset_sha256"):
        if _sha256(settings["dataset"]) != settings["dataset_sha256"]:
            raise CliError(f"dataset {settings['dataset']} changed since the manifest was written")
    out_dir = Path(manifest_path).parent if out_dir is None else Path(out_dir)
    return execute(command, settings, out_dir)


def build_parser():
    parser = argparse.ArgumentParser(prog="bootauc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bootauc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="flat key = value settings file")
            p.add_argument("--trials", type=int, help="Monte-Carlo trials (overrides config)")
            p.add_argument("--jobs", type=int, help="parallel worker processes")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--B", type=int, help="bootstrap replicates")
        p.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")

    est = sub.add_parser("estimate", help="all estimators on a labelled CSV dataset")
    est.add_argument("dataset", help="CSV: header, then label (1|2) and feature columns")
    est.add_argument("--classifier", default="lda", choices=("lda", "qda"))
    est.add_argument("--threshold", type=float, default=0.0)
    common(est, config=False)
    for name, text in (("simulate", "Monte-Carlo estimator comparison"),
                       ("smoothness", "feature sweep of one case"),
                       ("compare", "two-classifier comparison through LPOB"),
                       ("support-study", "AUC* at n/.632 and n/.5 against the truth at n")):
        common(sub.add_parser(name, help=text))
    rep = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rep.add_argument("manifest")
    rep.add_argument("--out-dir", help="write here instead of next to the manifest")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            manifest, _ = replay(args.manifest, args.out_dir)
        else:
            settings = _resolve(args)
            manifest, _ = execute(args.command, settings, Path(args.out_dir))
    except TrialFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRIAL
    except (CliError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {manifest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
