"""Statistical functionals, per-recording feature extraction, feature
matrix assembly, z-score normalization and Mann-Whitney U filtering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from . import emd as emd_mod
from . import kinematics as kin
from . import nonlinear
from . import pressure as prs
from .ingest import IN_AIR, ON_SURFACE, PRESSURE, PenRecording, project_modality

FUNCTIONALS = ("mean", "median", "std", "p1", "p99", "range")

EXACT_MW_LIMIT = 16  # exact enumeration when |A| + |B| <= this


def apply_functionals(values) -> dict[str, float | None]:
    """mean / median / population std / 1st and 99th percentile / their
    difference, linear-interpolation percentiles."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return {f: None for f in FUNCTIONALS}
    p1, p99 = np.percentile(v, [1, 99])
    return {
        "mean": float(np.mean(v)),
        "median": float(np.median(v)),
        "std": float(np.std(v)),
        "p1": float(p1),
        "p99": float(p99),
        "range": float(p99 - p1),
    }


def _expand(out, name, seq):
    """Collapse a sequence feature into six functionals (None-safe)."""
    if seq is None or len(np.atleast_1d(seq)) == 0:
        funcs = {f: None for f in FUNCTIONALS}
    else:
        funcs = apply_functionals(seq)
    for f, val in funcs.items():
        out[f"{name}.{f}"] = val


_KIN_SEQ = ("velocity", "velocity_x", "velocity_y",
            "accel", "accel_x", "accel_y",
            "jerk", "jerk_x", "jerk_y")
_STROKE_SEQ = ("stroke_height", "stroke_width", "stroke_duration",
               "stroke_length", "stroke_speed")
_GLOBALS = ("duration_on_surface", "duration_in_air", "writing_length",
            "writing_speed", "air_surface_ratio")
_PART_SEQ = tuple(f"{part}.{f}" for part in ("rising", "main", "falling")
                  for f in ("mean", "std", "duration", "rate")) + \
    ("rising.p_range", "rising.t_range", "falling.p_range", "falling.t_range")
_CORR = ("corr_p_v", "corr_p_vx", "corr_p_vy", "corr_p_a", "corr_p_ax", "corr_p_ay")


def _movement_features(rec: PenRecording, modality: str) -> dict[str, float | None]:
    tag = "surface" if modality == ON_SURFACE else "air"
    view = project_modality(rec, modality)
    out: dict[str, float | None] = {}

    seqs = kin.velocity_features(view) or {}
    for name in _KIN_SEQ:
        feat = seqs.get(name)
        _expand(out, f"kin.{tag}.{name}", feat.values if feat else None)

    counts = kin.ncv_nca(view) or {}
    for name in ("ncv", "ncv_rel", "nca", "nca_rel"):
        out[f"kin.{tag}.{name}"] = counts.get(name)

    strokes = kin.stroke_features(view) or {}
    for name in _STROKE_SEQ:
        _expand(out, f"kin.{tag}.{name}", strokes.get(name))

    if modality == ON_SURFACE:
        for name, val in kin.global_spatiotemporal(rec).items():
            out[f"kin.global.{name}"] = val

    channels = {"x": view.x, "y": view.y}
    vfeat = seqs.get("velocity")
    channels["v"] = vfeat.values if vfeat is not None else np.empty(0)
    for ch, sig in channels.items():
        for name, val in nonlinear.channel_features(sig).items():
            out[f"nl.{ch}.{name}"] = val
    for ch in ("x", "y"):
        d = emd_mod.sift(channels[ch])
        for name, val in emd_mod.intrinsic_features(d).items():
            out[f"emd.{ch}.{name}"] = val
        out[f"emd.{ch}.intrinsic_snr"] = emd_mod.intrinsic_snr(d)
    return out


def _pressure_features(rec: PenRecording) -> dict[str, float | None]:
    view = project_modality(rec, PRESSURE)
    out: dict[str, float | None] = {}

    rate = prs.pressure_rate(view)
    _expand(out, "prs.rate", rate.values if rate else None)

    glob = kin.global_spatiotemporal(rec)
    counts = prs.ncp(view, glob["writing_length"]) or {}
    out["prs.ncp"] = counts.get("ncp")
    out["prs.ncp_rel"] = counts.get("ncp_rel")

    for name, val in prs.pressure_correlations(rec).items():
        out[f"prs.{name}"] = val

    parts = prs.stroke_part_features(view)
    for name in _PART_SEQ:
        _expand(out, f"prs.{name}", parts.get(name))

    for name, val in nonlinear.channel_features(view.p).items():
        out[f"nl.p.{name}"] = val
    d = emd_mod.sift(view.p)
    for name, val in emd_mod.intrinsic_features(d).items():
        out[f"emd.p.{name}"] = val
    out["emd.p.intrinsic_snr"] = emd_mod.intrinsic_snr(d)
    return out


def extract_recording_features(rec: PenRecording, modality: str) -> dict[str, float | None]:
    """Full scalar feature inventory of one recording under one modality."""
    if modality == PRESSURE:
        return _pressure_features(rec)
    return _movement_features(rec, modality)


# ---------------------------------------------------------------------------


@dataclass
class FeatureMatrix:
    """Subjects x named features with NaN marking missing cells."""

    feature_names: list[str]
    values: np.ndarray  # float, NaN = missing
    labels: np.ndarray  # 1 = PD, 0 = control
    subject_ids: list[str]
    task_id: object = None  # int or "all"
    modality: str | None = None

    @property
    def n_subjects(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def select_columns(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        return FeatureMatrix([self.feature_names[i] for i in idx],
                             self.values[:, idx], self.labels,
                             list(self.subject_ids), self.task_id, self.modality)

    def to_csv(self, path, meta: str | None = None) -> None:
        lines = []
        if meta:
            lines.append(f"# {meta}")
        lines.append("subject_id,label," + ",".join(self.feature_names))
        for i, sid in enumerate(self.subject_ids):
            row = [sid, "PD" if self.labels[i] == 1 else "H"]
            for v in self.values[i]:
                row.append("" if not np.isfinite(v) else repr(float(v)))
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path, task_id=None, modality=None) -> "FeatureMatrix":
        lines = [ln for ln in Path(path).read_text().splitlines()
                 if ln.strip() and not ln.startswith("#")]
        header = lines[0].split(",")
        names = header[2:]
        sids, labels, rows = [], [], []
        for ln in lines[1:]:
            parts = ln.split(",")
            sids.append(parts[0])
            labels.append(1 if parts[1] == "PD" else 0)
            rows.append([float(v) if v else np.nan for v in parts[2:]])
        return cls(names, np.asarray(rows, dtype=float),
                   np.asarray(labels, dtype=int), sids, task_id, modality)


def assemble(features_by_subject: dict[str, dict[str, float | None]],
             labels_by_subject: dict[str, str],
             task_id, modality) -> FeatureMatrix:
    """Stack per-subject feature dicts into a matrix with deterministic
    (lexicographic) column order and sorted subject rows."""
    sids = sorted(features_by_subject)
    names = sorted({n for f in features_by_subject.values() for n in f})
    values = np.full((len(sids), len(names)), np.nan)
    col = {n: j for j, n in enumerate(names)}
    for i, sid in enumerate(sids):
        for n, v in features_by_subject[sid].items():
            if v is not None and np.isfinite(v):
                values[i, col[n]] = v
    labels = np.array([1 if labels_by_subject[s] == "PD" else 0 for s in sids])
    return FeatureMatrix(names, values, labels, sids, task_id, modality)


def concat_matrices(matrices: list[FeatureMatrix], modality) -> FeatureMatrix:
    """Column-concatenate per-task matrices (same subjects) into an
    'all tasks' matrix; names gain a task prefix."""
    base = matrices[0]
    names, blocks = [], []
    for m in matrices:
        if m.subject_ids != base.subject_ids:
            raise ValueError("subject sets differ across tasks")
        names.extend(f"t{m.task_id}.{n}" for n in m.feature_names)
        blocks.append(m.values)
    return FeatureMatrix(names, np.hstack(blocks), base.labels,
                         list(base.subject_ids), "all", modality)


# ---------------------------------------------------------------------------
# Mann-Whitney U test


def _u_statistics(a, b):
    n, m = len(a), len(b)
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)  # midranks
    ua = float(np.sum(ranks[:n])) - n * (n + 1) / 2.0
    ub = n * m - ua
    return ua, ub, ranks


def _exact_p(ranks, n, u_obs):
    """Two-sided exact p: share of group assignments whose min(U_A, U_B)
    is at least as extreme as observed."""
    total = 0
    count = 0
    nm = n * (len(ranks) - n)
    base = n * (n + 1) / 2.0
    for comb in combinations(range(len(ranks)), n):
        ua = sum(ranks[i] for i in comb) - base
        u = min(ua, nm - ua)
        total += 1
        if u <= u_obs + 1e-9:
            count += 1
    return count / total


def mann_whitney_u(group_a, group_b) -> tuple[float, float]:
    """U = min(U_A, U_B) with midrank ties, and a two-sided p-value.

    Exact enumeration for small samples (|A| + |B| <= 16), otherwise a
    normal approximation with tie and continuity corrections.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    n, m = len(a), len(b)
    if n < 2 or m < 2:
        raise ValueError("each group needs at least 2 values")
    ua, ub, ranks = _u_statistics(a, b)
    u = min(ua, ub)
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return u, 1.0
    big_n = n + m
    if big_n <= EXACT_MW_LIMIT:
        return u, _exact_p(ranks, n, u)
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / (big_n * (big_n - 1))
    var = n * m / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0:
        return u, 1.0
    z = (u - n * m / 2.0 + 0.5) / math.sqrt(var)
    p = 2.0 * float(ndtr(z))
    return u, min(1.0, p)


@dataclass
class FilterReport:
    feature_names: list[str]
    u_values: list[float | None]
    p_values: list[float | None]
    kept: list[bool]
    alpha: float

    def to_csv(self, path, meta: str | None = None) -> None:
        lines = []
        if meta:
            lines.append(f"# {meta}")
        lines.append("feature,U,p,kept")
        for name, u, p, k in zip(self.feature_names, self.u_values,
                                 self.p_values, self.kept):
            us = "" if u is None else repr(float(u))
            ps = "" if p is None else repr(float(p))
            lines.append(f"{name},{us},{ps},{int(k)}")
        Path(path).write_text("\n".join(lines) + "\n")


def filter_features(matrix: FeatureMatrix, alpha: float = 0.05
                    ) -> tuple[FeatureMatrix, FilterReport]:
    """Keep columns whose PD/control Mann-Whitney p-value is <= alpha.

    Columns without at least 2 finite values per class are dropped.  The
    result can be empty; callers must report such cells as unavailable,
    never as AUC 0.
    """
    if len(np.unique(matrix.labels)) < 2:
        raise ValueError("both classes required")
    us, ps, kept = [], [], []
    pd_mask = matrix.labels == 1
    for j in range(matrix.n_features):
        col = matrix.values[:, j]
        a = col[pd_mask & np.isfinite(col)]
        b = col[~pd_mask & np.isfinite(col)]
        if len(a) < 2 or len(b) < 2:
            us.append(None)
            ps.append(None)
            kept.append(False)
            continue
        u, p = mann_whitney_u(a, b)
        us.append(u)
        ps.append(p)
        kept.append(p <= alpha)
    report = FilterReport(list(matrix.feature_names), us, ps, kept, alpha)
    idx = np.nonzero(kept)[0]
    return matrix.select_columns(idx), report


# ---------------------------------------------------------------------------
# Per-fold preprocessing (imputation, normalization, optional filtering)


@dataclass
class Preprocessor:
    columns: np.ndarray
    medians: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def transform(self, values: np.ndarray) -> np.ndarray:
        x = values[:, self.columns].copy()
        for j in range(x.shape[1]):
            col = x[:, j]
            col[~np.isfinite(col)] = self.medians[j]
        return (x - self.means) / self.stds


def fit_preprocessor(matrix: FeatureMatrix, train_idx, alpha: float | None = None,
                     max_missing: float = 0.5) -> Preprocessor | None:
    """Fit imputation medians and z-score statistics on the training rows
    only; optionally apply the Mann-Whitney filter there too.

    Drops columns missing for more than ``max_missing`` of the training
    rows and constant columns.  Returns None when nothing survives.
    """
    train = matrix.values[train_idx]
    labels = matrix.labels[train_idx]
    n = len(train_idx)
    finite = np.isfinite(train)
    cols = np.nonzero(finite.sum(axis=0) >= n * (1 - max_missing))[0]
    if len(cols) == 0:
        return None

    if alpha is not None:
        keep = []
        pd_mask = labels == 1
        for jj, j in enumerate(cols):
            col = train[:, j]
            a = col[pd_mask & np.isfinite(col)]
            b = col[~pd_mask & np.isfinite(col)]
            if len(a) < 2 or len(b) < 2:
                continue
            _, p = mann_whitney_u(a, b)
            if p <= alpha:
                keep.append(j)
        cols = np.asarray(keep, dtype=int)
        if len(cols) == 0:
            return None

    sub = train[:, cols]
    medians = np.array([np.median(c[np.isfinite(c)]) for c in sub.T])
    imputed = sub.copy()
    for j in range(imputed.shape[1]):
        col = imputed[:, j]
        col[~np.isfinite(col)] = medians[j]
    means = imputed.mean(axis=0)
    stds = imputed.std(axis=0)
    ok = stds > 1e-12
    if not np.any(ok):
        return None
    return Preprocessor(cols[ok], medians[ok], means[ok], stds[ok])
