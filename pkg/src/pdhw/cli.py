"""Command-line pipeline: synth -> extract -> filter -> evaluate -> report.

Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence error.
Logs go to stderr; results go to files (and stdout for `report`).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .featurize import (FeatureMatrix, assemble, extract_recording_features,
                        filter_features)
from .ingest import (IN_AIR, LABEL_CONTROL, LABEL_PD, MODALITIES, N_TASKS,
                     ON_SURFACE, PRESSURE, RecordingError, parse_recording,
                     read_manifest, recording_filename, synthesize_cohort,
                     write_manifest, write_recording)
from .svm import ConvergenceError, EvaluationReport, evaluate_matrices

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

_MOD_SLUG = {ON_SURFACE: "surface", IN_AIR: "air", PRESSURE: "pressure"}


def _log(msg):
    print(msg, file=sys.stderr)


_UNHASHED_ARGS = ("func", "command", "config", "out", "force", "jobs",
                  "data", "manifest", "features", "evaluation")


def _config_hash(args) -> str:
    # hash only the knobs that affect results, so identical runs into
    # different output directories produce byte-identical artifacts
    payload = {k: v for k, v in sorted(vars(args).items())
               if k not in _UNHASHED_ARGS and not callable(v)}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _meta(args, seed) -> str:
    return f"pdhw {__version__} seed={seed} config={_config_hash(args)}"


def _read_config_file(path) -> dict:
    """Simple key = value text format; '#' starts a comment."""
    out = {}
    for ln in Path(path).read_text().splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        key, _, val = ln.partition("=")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _ensure_outdir(path, force):
    path = Path(path)
    if path.exists() and any(path.iterdir()) and not force:
        raise RecordingError(f"{path} exists and is not empty (use --force)")
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    if args.n_pd < 1 or args.n_control < 1:
        _log("synth: subject counts must be >= 1")
        return EXIT_USAGE
    out = _ensure_outdir(args.out, args.force)
    recs = synthesize_cohort(args.n_pd, args.n_control, args.seed)
    for rec in recs:
        write_recording(rec, out / recording_filename(rec.subject_id, rec.task_id))
    write_manifest(recs, out / "manifest.csv")
    _log(f"synth: wrote {len(recs)} recordings + manifest to {out}")
    return EXIT_OK


def _load_cohort(data_dir, manifest_path):
    labels = read_manifest(manifest_path)
    recs = []
    missing = []
    for sid, label in labels.items():
        for task in range(1, N_TASKS + 1):
            path = Path(data_dir) / recording_filename(sid, task)
            if not path.exists():
                missing.append(str(path))
                continue
            try:
                recs.append(parse_recording(path, sid, task, label))
            except RecordingError as exc:
                missing.append(f"{path}: {exc}")
    for item in missing:
        _log(f"extract: skipping {item}")
    return recs, labels


def _matrix_path(out_dir, task, modality):
    return Path(out_dir) / f"features_task{task}_{_MOD_SLUG[modality]}.csv"


def extract_matrices(recs, labels, jobs=1):
    """All 21 (task, modality) feature matrices for a cohort."""
    units = [(rec, mod) for rec in recs for mod in MODALITIES]
    feats = Parallel(n_jobs=jobs)(
        delayed(extract_recording_features)(rec, mod) for rec, mod in units)
    by_cell: dict[tuple, dict] = {}
    for (rec, mod), f in zip(units, feats):
        by_cell.setdefault((rec.task_id, mod), {})[rec.subject_id] = f
    matrices = {}
    for task in range(1, N_TASKS + 1):
        for mod in MODALITIES:
            cell = by_cell.get((task, mod), {})
            cell_labels = {sid: labels[sid] for sid in cell}
            matrices[(task, mod)] = assemble(cell, cell_labels, task, mod)
    return matrices


def cmd_extract(args) -> int:
    out = _ensure_outdir(args.out, args.force)
    recs, labels = _load_cohort(args.data, args.manifest)
    if not recs:
        _log("extract: no readable recordings")
        return EXIT_DATA
    matrices = extract_matrices(recs, labels, jobs=args.jobs)
    meta = _meta(args, args.seed)
    counts = {}
    for (task, mod), m in sorted(matrices.items()):
        m.to_csv(_matrix_path(out, task, mod), meta=meta)
        counts[f"task{task}/{_MOD_SLUG[mod]}"] = m.n_features
    manifest = {"meta": meta, "n_subjects": len(labels),
                "feature_counts": counts,
                "total_features": int(sum(counts.values()))}
    (out / "feature_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _log(f"extract: wrote {len(matrices)} matrices to {out}")
    return EXIT_OK


def _load_matrices(features_dir):
    matrices = {}
    for task in range(1, N_TASKS + 1):
        for mod in MODALITIES:
            path = _matrix_path(features_dir, task, mod)
            if not path.exists():
                raise RecordingError(f"missing feature matrix {path}")
            matrices[(task, mod)] = FeatureMatrix.from_csv(path, task, mod)
    return matrices


def cmd_filter(args) -> int:
    out = _ensure_outdir(args.out, args.force)
    matrices = _load_matrices(args.features)
    meta = _meta(args, args.seed)
    for (task, mod), m in sorted(matrices.items()):
        kept, report = filter_features(m, args.alpha)
        slug = _MOD_SLUG[mod]
        kept.to_csv(out / f"filtered_task{task}_{slug}.csv", meta=meta)
        report.to_csv(out / f"filter_report_task{task}_{slug}.csv", meta=meta)
    _log(f"filter: wrote filtered matrices and reports to {out}")
    return EXIT_OK


def _parse_grid(text):
    if text is None:
        return None
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_evaluate(args) -> int:
    out = _ensure_outdir(args.out, args.force)
    matrices = _load_matrices(args.features)
    report = evaluate_matrices(
        matrices, alpha=args.alpha, folds=args.folds, seed=args.seed,
        paper_protocol=args.paper_protocol, nested=args.nested,
        c_grid=_parse_grid(args.grid_c), gamma_grid=_parse_grid(args.grid_gamma),
        n_jobs=args.jobs)
    report.meta = {"tool": f"pdhw {__version__}", "seed": args.seed,
                   "config": _config_hash(args)}
    (out / "evaluation.json").write_text(report.to_json() + "\n")
    (out / "evaluation.txt").write_text(report.render_table() + "\n")
    _log(f"evaluate: wrote evaluation.json and evaluation.txt to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = EvaluationReport.from_json(Path(args.evaluation).read_text())
    table = report.render_table()
    if args.out:
        Path(args.out).write_text(table + "\n")
    else:
        print(table)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdhw",
                                     description="Handwriting-based PD classification pipeline")
    parser.add_argument("--config", help="key = value config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)
    parser._subcommands = sub.choices

    def common(p):
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--force", action="store_true")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("n_pd", type=int)
    p.add_argument("n_control", type=int)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract per-task/per-modality feature CSVs")
    p.add_argument("--data", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("filter", help="Mann-Whitney filter on extracted features")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("evaluate", help="grid-search SVM evaluation grid")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--paper-protocol", action="store_true",
                   help="whole-dataset preprocessing and filtering before CV")
    p.add_argument("--nested", action="store_true",
                   help="inner 5-fold hyperparameter selection")
    p.add_argument("--grid-c", help="comma-separated C values (default 2^-10..2^7)")
    p.add_argument("--grid-gamma", help="comma-separated gamma values (default 2^-7..2^7)")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render an evaluation JSON as a text table")
    p.add_argument("--evaluation", required=True)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, remaining = parser.parse_known_args(argv)
    if remaining:
        parser.error(f"unrecognized arguments: {' '.join(remaining)}")
    if args.config:
        defaults = _read_config_file(args.config)
        known = set(vars(args))
        for key, val in defaults.items():
            if key not in known:
                parser.error(f"unknown config key {key}")
        # re-parse so explicit flags still win over config values
        cast = {}
        for key, val in defaults.items():
            cur = getattr(args, key)
            if isinstance(cur, bool):
                cast[key] = val.lower() in ("1", "true", "yes")
            elif isinstance(cur, int):
                cast[key] = int(val)
            elif isinstance(cur, float):
                cast[key] = float(val)
            else:
                cast[key] = val
        parser.set_defaults(**cast)
        for sp in parser._subcommands.values():
            sp.set_defaults(**{k: v for k, v in cast.items()
                               if any(a.dest == k for a in sp._actions)})
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RecordingError as exc:
        _log(f"error: {exc}")
        return EXIT_DATA
    except OSError as exc:
        _log(f"error: {exc}")
        return EXIT_DATA
    except ConvergenceError as exc:
        _log(f"error: {exc}")
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
