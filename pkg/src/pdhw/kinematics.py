"""Kinematic and spatio-temporal features of a movement modality view.

Derivatives use adjacent-sample differences on the true (possibly
non-uniform) time base and never bridge pen lifts: each stroke is
differentiated on its own and the pieces are concatenated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import IN_AIR, ON_SURFACE, PenRecording, ModalityView, project_modality


@dataclass
class TimeSeriesFeature:
    name: str
    values: np.ndarray
    time: np.ndarray  # seconds, same length


def derivative(series, time):
    """First difference ds/dt aligned to interval midpoints.

    Returns (values, midpoint_times), each one shorter than the input.
    """
    s = np.asarray(series, dtype=float)
    t = np.asarray(time, dtype=float)
    if len(s) < 2:
        raise ValueError("derivative needs at least 2 samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time must be strictly increasing")
    return np.diff(s) / np.diff(t), (t[:-1] + t[1:]) / 2.0


def count_local_extrema(values) -> int:
    """Strict-slope-sign-change extrema; an equal-value plateau higher
    (lower) than both neighbors counts once."""
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        return 0
    # compress equal-value runs
    keep = np.ones(len(v), dtype=bool)
    keep[1:] = v[1:] != v[:-1]
    c = v[keep]
    if len(c) < 3:
        return 0
    d = np.sign(np.diff(c))
    return int(np.sum(d[:-1] * d[1:] < 0))


def _per_stroke_derivatives(view: ModalityView, order: int):
    """Derivative chains (dx, dy, t) of the given order per stroke."""
    out = []
    for a, z in view.strokes:
        if z - a + 1 < order + 1:
            continue
        dx, dy = view.x[a:z + 1], view.y[a:z + 1]
        t = view.t[a:z + 1]
        for _ in range(order):
            dx, _tm = derivative(dx, t)
            dy, t = derivative(dy, t)
        out.append((dx, dy, t))
    return out


def _concat(parts, idx):
    if not parts:
        return np.empty(0)
    return np.concatenate([p[idx] for p in parts])


def velocity_features(view: ModalityView) -> dict[str, TimeSeriesFeature] | None:
    """Velocity/acceleration/jerk magnitudes and x/y components.

    Returns None when no stroke is long enough for a velocity estimate.
    """
    out = {}
    for order, stem in ((1, "velocity"), (2, "accel"), (3, "jerk")):
        parts = _per_stroke_derivatives(view, order)
        if not parts:
            if order == 1:
                return None
            continue
        cx, cy, ct = _concat(parts, 0), _concat(parts, 1), _concat(parts, 2)
        out[stem] = TimeSeriesFeature(stem, np.hypot(cx, cy), ct)
        out[f"{stem}_x"] = TimeSeriesFeature(f"{stem}_x", cx, ct)
        out[f"{stem}_y"] = TimeSeriesFeature(f"{stem}_y", cy, ct)
    return out


def ncv_nca(view: ModalityView) -> dict[str, float] | None:
    """Counts of velocity / acceleration local extrema and their
    per-second rates over the whole task duration."""
    vparts = _per_stroke_derivatives(view, 1)
    aparts = _per_stroke_derivatives(view, 2)
    if not vparts:
        return None
    ncv = sum(count_local_extrema(np.hypot(px, py)) for px, py, _ in vparts)
    nca = sum(count_local_extrema(np.hypot(px, py)) for px, py, _ in aparts)
    dur = view.task_duration
    return {
        "ncv": float(ncv),
        "ncv_rel": ncv / dur if dur > 0 else None,
        "nca": float(nca),
        "nca_rel": nca / dur if dur > 0 else None,
    }


def stroke_features(view: ModalityView) -> dict[str, np.ndarray] | None:
    """Per-stroke height, width, duration, path length and speed.

    Strokes with fewer than 2 samples are skipped; returns None when
    every stroke is skipped.
    """
    rows = {"stroke_height": [], "stroke_width": [], "stroke_duration": [],
            "stroke_length": [], "stroke_speed": []}
    for a, z in view.strokes:
        if z - a + 1 < 2:
            continue
        x, y, t = view.x[a:z + 1], view.y[a:z + 1], view.t[a:z + 1]
        length = float(np.sum(np.hypot(np.diff(x), np.diff(y))))
        dur = float(t[-1] - t[0])
        rows["stroke_height"].append(float(y.max() - y.min()))
        rows["stroke_width"].append(float(x.max() - x.min()))
        rows["stroke_duration"].append(dur)
        rows["stroke_length"].append(length)
        rows["stroke_speed"].append(length / dur if dur > 0 else np.nan)
    if not rows["stroke_height"]:
        return None
    out = {k: np.asarray(v, dtype=float) for k, v in rows.items()}
    out["stroke_speed"] = out["stroke_speed"][np.isfinite(out["stroke_speed"])]
    return out


def global_spatiotemporal(rec: PenRecording) -> dict[str, float | None]:
    """Writing/in-air durations, on-surface path length, global speed
    and the in-air to on-surface time ratio."""
    surf = project_modality(rec, ON_SURFACE)
    air = project_modality(rec, IN_AIR)

    def _dur(view):
        return sum(float(view.t[z] - view.t[a]) for a, z in view.strokes)

    def _len(view):
        total = 0.0
        for a, z in view.strokes:
            total += float(np.sum(np.hypot(np.diff(view.x[a:z + 1]),
                                           np.diff(view.y[a:z + 1]))))
        return total

    w_dur = _dur(surf)
    a_dur = _dur(air)
    w_len = _len(surf)
    out = {
        "duration_on_surface": w_dur,
        "duration_in_air": a_dur,
        "writing_length": w_len,
    }
    if w_dur > 0:
        out["writing_speed"] = w_len / w_dur
        out["air_surface_ratio"] = a_dur / w_dur
    else:
        out["writing_speed"] = None
        out["air_surface_ratio"] = None
    return out
