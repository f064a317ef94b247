"""Pressure features: rate of change, extrema counts, correlations with
kinematics, and rising / main / falling stroke decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import ON_SURFACE, PenRecording, ModalityView, project_modality
from .kinematics import TimeSeriesFeature, count_local_extrema, derivative


@dataclass
class PressureStrokeParts:
    """Index ranges (inclusive, stroke-local) of the rising edge, main
    part and falling edge; any may be empty (None)."""

    rising: tuple[int, int] | None
    main: tuple[int, int] | None
    falling: tuple[int, int] | None
    threshold: float


def _per_stroke_rate(view: ModalityView):
    parts = []
    for a, z in view.strokes:
        if z - a + 1 < 2:
            continue
        r, tm = derivative(view.p[a:z + 1], view.t[a:z + 1])
        parts.append((r, tm))
    return parts


def pressure_rate(view: ModalityView) -> TimeSeriesFeature | None:
    """dp/dt of normalized pressure, per stroke, concatenated."""
    parts = _per_stroke_rate(view)
    if not parts:
        return None
    return TimeSeriesFeature("pressure_rate",
                             np.concatenate([p[0] for p in parts]),
                             np.concatenate([p[1] for p in parts]))


def ncp(view: ModalityView, writing_length: float | None) -> dict | None:
    """Local-extrema count of the dp/dt profile; the relative variant is
    normalized by total on-surface path length."""
    parts = _per_stroke_rate(view)
    if not parts:
        return None
    n = sum(count_local_extrema(r) for r, _ in parts)
    rel = n / writing_length if writing_length else None
    return {"ncp": float(n), "ncp_rel": rel}


def _pearson(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 3 or np.std(a) == 0 or np.std(b) == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def pressure_correlations(rec: PenRecording) -> dict[str, float | None]:
    """Pearson correlation of pressure with velocity/acceleration
    magnitudes and components over on-surface samples.

    Pressure is truncated per stroke to the derivative midpoint grid:
    one trailing sample dropped against velocities, two against
    accelerations.
    """
    view = project_modality(rec, ON_SURFACE)
    p1, p2 = [], []  # pressure aligned with velocity / acceleration grids
    vx, vy, ax, ay = [], [], [], []
    for a, z in view.strokes:
        seg = slice(a, z + 1)
        x, y, t, p = view.x[seg], view.y[seg], view.t[seg], view.p[seg]
        if len(x) >= 2:
            dvx, _ = derivative(x, t)
            dvy, tm = derivative(y, t)
            vx.append(dvx)
            vy.append(dvy)
            p1.append(p[:-1])
        if len(x) >= 3:
            dvx, _ = derivative(x, t)
            dvy, tm = derivative(y, t)
            dax, _ = derivative(dvx, tm)
            day, _ = derivative(dvy, tm)
            ax.append(dax)
            ay.append(day)
            p2.append(p[:-2])
    out = {}
    if vx:
        cvx, cvy, cp = map(np.concatenate, (vx, vy, p1))
        out["corr_p_v"] = _pearson(cp, np.hypot(cvx, cvy))
        out["corr_p_vx"] = _pearson(cp, cvx)
        out["corr_p_vy"] = _pearson(cp, cvy)
    else:
        out["corr_p_v"] = out["corr_p_vx"] = out["corr_p_vy"] = None
    if ax:
        cax, cay, cp = map(np.concatenate, (ax, ay, p2))
        out["corr_p_a"] = _pearson(cp, np.hypot(cax, cay))
        out["corr_p_ax"] = _pearson(cp, cax)
        out["corr_p_ay"] = _pearson(cp, cay)
    else:
        out["corr_p_a"] = out["corr_p_ax"] = out["corr_p_ay"] = None
    return out


def split_pressure_stroke(p) -> PressureStrokeParts:
    """Split one stroke's pressure at its median: rising prefix up to the
    first sample >= median, falling suffix from the last sample >= median,
    main part in between."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    if n < 3:
        return PressureStrokeParts(None, (0, n - 1), None, float(np.median(p)) if n else 0.0)
    m = float(np.median(p))
    ge = np.nonzero(p >= m)[0]
    first, last = int(ge[0]), int(ge[-1])
    rising = (0, first)
    falling = (last, n - 1)
    main = (first + 1, last - 1) if last - first > 1 else None
    return PressureStrokeParts(rising, main, falling, m)


def edge_features(parts: PressureStrokeParts, p, t) -> dict[str, float | None]:
    """Per-part mean/std/duration/mean-rate plus rising and falling
    pressure/time ranges."""
    p = np.asarray(p, dtype=float)
    t = np.asarray(t, dtype=float)
    out = {}
    for name, rng in (("rising", parts.rising), ("main", parts.main),
                      ("falling", parts.falling)):
        if rng is None:
            for f in ("mean", "std", "duration", "rate"):
                out[f"{name}.{f}"] = None
            continue
        a, z = rng
        seg_p, seg_t = p[a:z + 1], t[a:z + 1]
        out[f"{name}.mean"] = float(np.mean(seg_p))
        out[f"{name}.std"] = float(np.std(seg_p))
        out[f"{name}.duration"] = float(seg_t[-1] - seg_t[0])
        if len(seg_p) >= 2:
            r, _ = derivative(seg_p, seg_t)
            out[f"{name}.rate"] = float(np.mean(r))
        else:
            out[f"{name}.rate"] = None
    for name, rng in (("rising", parts.rising), ("falling", parts.falling)):
        if rng is None:
            out[f"{name}.p_range"] = None
            out[f"{name}.t_range"] = None
        else:
            a, z = rng
            out[f"{name}.p_range"] = float(p[z] - p[a])
            out[f"{name}.t_range"] = float(t[z] - t[a])
    return out


def stroke_part_features(view: ModalityView) -> dict[str, np.ndarray]:
    """Edge/main features per stroke as sequences for the functionals."""
    acc: dict[str, list[float]] = {}
    for a, z in view.strokes:
        if z - a + 1 < 3:
            continue
        p, t = view.p[a:z + 1], view.t[a:z + 1]
        feats = edge_features(split_pressure_stroke(p), p, t)
        for k, v in feats.items():
            if v is not None:
                acc.setdefault(k, []).append(v)
    return {k: np.asarray(v, dtype=float) for k, v in acc.items()}
