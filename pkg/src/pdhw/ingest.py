"""Pen-tablet recording model, SVC-style file I/O, stroke segmentation,
modality views and a synthetic labeled cohort generator.

A recording is one subject writing one of seven tasks on a digitizing
tablet.  Each sample carries pen position, a binary pen state (1 =
on-surface, 0 = in-air), tip pressure and a millisecond timestamp.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Pressure full scale (device units); features use p / P_MAX.
P_MAX = 1024

ON_SURFACE = "on-surface"
IN_AIR = "in-air"
PRESSURE = "pressure"
MODALITIES = (ON_SURFACE, IN_AIR, PRESSURE)

LABEL_PD = "PD"
LABEL_CONTROL = "H"
LABEL_UNKNOWN = "unlabeled"

N_TASKS = 7


class RecordingError(ValueError):
    """Malformed recording file or invariant violation."""


@dataclass(frozen=True)
class PenSample:
    x: int
    y: int
    t: int  # milliseconds since recording start
    pen_state: int  # 1 on-surface, 0 in-air
    pressure: int  # device units in [0, P_MAX]


@dataclass
class PenRecording:
    """One subject x task recording, stored as parallel arrays."""

    subject_id: str
    task_id: int
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray  # ms, strictly increasing
    pen_state: np.ndarray
    pressure: np.ndarray
    label: str = LABEL_UNKNOWN

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.t = np.asarray(self.t, dtype=np.int64)
        self.pen_state = np.asarray(self.pen_state, dtype=np.int64)
        self.pressure = np.asarray(self.pressure, dtype=np.int64)
        self.validate()

    def validate(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.pen_state) == len(self.pressure) == n):
            raise RecordingError("channel length mismatch")
        if not 1 <= self.task_id <= N_TASKS:
            raise RecordingError(f"task_id {self.task_id} outside [1, {N_TASKS}]")
        if n and self.t[0] < 0:
            raise RecordingError("negative timestamp")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise RecordingError("timestamps not strictly increasing")
        if np.any((self.pen_state != 0) & (self.pen_state != 1)):
            raise RecordingError("pen_state outside {0, 1}")
        if np.any((self.pressure > 0) & (self.pen_state == 0)):
            raise RecordingError("nonzero pressure while in air")
        if np.any(self.pressure < 0) or np.any(self.pressure > P_MAX):
            raise RecordingError("pressure outside [0, P_MAX]")
        if int(np.sum(self.pen_state)) < 2:
            raise RecordingError("fewer than 2 on-surface samples")

    def __len__(self):
        return len(self.t)

    @property
    def samples(self) -> list[PenSample]:
        return [
            PenSample(int(x), int(y), int(t), int(b), int(p))
            for x, y, t, b, p in zip(self.x, self.y, self.t, self.pen_state, self.pressure)
        ]

    @property
    def duration(self) -> float:
        """Whole-task duration in seconds."""
        if len(self.t) < 2:
            return 0.0
        return float(self.t[-1] - self.t[0]) / 1000.0


@dataclass(frozen=True)
class StrokeSegment:
    """Maximal run of constant pen state, inclusive sample indices."""

    kind: str  # ON_SURFACE or IN_AIR
    start_index: int
    end_index: int
    duration: float  # seconds


@dataclass
class ModalityView:
    """Projection of a recording onto one modality.

    All channels share the (seconds) time base.  ``strokes`` holds
    (start, end) inclusive index pairs into the view's own arrays; runs
    stay contiguous after projection.  The pressure view covers exactly
    the on-surface sample set with ``p`` = pressure / P_MAX.
    """

    modality: str
    t: np.ndarray  # seconds
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray  # normalized pressure
    strokes: list[tuple[int, int]] = field(default_factory=list)
    task_duration: float = 0.0

    def __len__(self):
        return len(self.t)


def segment_strokes(rec: PenRecording) -> list[StrokeSegment]:
    """Partition the sample range into maximal constant-pen-state runs."""
    b = rec.pen_state
    n = len(b)
    if n == 0:
        return []
    out = []
    start = 0
    for i in range(1, n + 1):
        if i == n or b[i] != b[start]:
            kind = ON_SURFACE if b[start] == 1 else IN_AIR
            dur = float(rec.t[i - 1] - rec.t[start]) / 1000.0
            out.append(StrokeSegment(kind, start, i - 1, dur))
            start = i
    return out


def project_modality(rec: PenRecording, modality: str) -> ModalityView:
    """Select the modality's samples, keeping per-stroke boundaries."""
    if modality not in MODALITIES:
        raise ValueError(f"unknown modality {modality!r}")
    want_state = 0 if modality == IN_AIR else 1
    strokes = []
    pos = 0
    for seg in segment_strokes(rec):
        seg_state = 1 if seg.kind == ON_SURFACE else 0
        if seg_state == want_state:
            length = seg.end_index - seg.start_index + 1
            strokes.append((pos, pos + length - 1))
            pos += length
    mask = rec.pen_state == want_state
    t0 = rec.t[0] if len(rec.t) else 0  # shift-invariant time base
    return ModalityView(
        modality=modality,
        t=(rec.t[mask] - t0).astype(float) / 1000.0,
        x=rec.x[mask].astype(float),
        y=rec.y[mask].astype(float),
        p=rec.pressure[mask].astype(float) / P_MAX,
        strokes=strokes,
        task_duration=rec.duration,
    )


# ---------------------------------------------------------------------------
# SVC-style file format:
#   header line: sample count N
#   N lines:     x y t pen_state azimuth altitude pressure
# azimuth/altitude are parsed and ignored.


def parse_recording(path, subject_id: str | None = None, task_id: int | None = None,
                    label: str = LABEL_UNKNOWN) -> PenRecording:
    """Parse an .svc-like file; see module docstring for the line format.

    Subject and task default to the ``<subject>__<task>.svc`` filename
    convention.  Consecutive duplicate timestamps are collapsed keeping
    the last sample.  Nonzero in-air pressure is clamped to 0 with a
    warning.
    """
    path = Path(path)
    if subject_id is None or task_id is None:
        stem = path.stem
        if "__" in stem:
            sid, _, tid = stem.rpartition("__")
            subject_id = subject_id or sid
            if task_id is None:
                try:
                    task_id = int(tid)
                except ValueError:
                    raise RecordingError(f"{path}: cannot infer task id from filename")
        else:
            raise RecordingError(f"{path}: cannot infer subject/task from filename")

    lines = path.read_text().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise RecordingError(f"{path}: empty file")
    try:
        declared = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise RecordingError(f"{path}: line 1: bad header")
    body = lines[1:]
    if len(body) != declared:
        raise RecordingError(
            f"{path}: declared {declared} samples, found {len(body)}")

    rows = np.empty((declared, 7), dtype=np.int64)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 7:
            raise RecordingError(f"{path}: line {i + 2}: expected 7 fields, got {len(parts)}")
        try:
            rows[i] = [int(v) for v in parts]
        except ValueError:
            raise RecordingError(f"{path}: line {i + 2}: non-integer field")

    x, y, t, b, p = rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 6]
    bad = (p > 0) & (b == 0)
    if np.any(bad):
        warnings.warn(f"{path}: {int(bad.sum())} in-air sample(s) with nonzero pressure, clamped")
        p = np.where(bad, 0, p)

    order = np.argsort(t, kind="stable")
    x, y, t, b, p = x[order], y[order], t[order], b[order], p[order]
    # collapse consecutive duplicate timestamps, keeping the last sample
    keep = np.ones(len(t), dtype=bool)
    keep[:-1] = t[:-1] != t[1:]
    x, y, t, b, p = x[keep], y[keep], t[keep], b[keep], p[keep]

    return PenRecording(subject_id, int(task_id), x, y, t, b, p, label=label)


def write_recording(rec: PenRecording, path) -> None:
    """Write a recording in the format parse_recording reads."""
    path = Path(path)
    lines = [str(len(rec))]
    for xx, yy, tt, bb, pp in zip(rec.x, rec.y, rec.t, rec.pen_state, rec.pressure):
        lines.append(f"{xx} {yy} {tt} {bb} 0 0 {pp}")
    path.write_text("\n".join(lines) + "\n")


def recording_filename(subject_id: str, task_id: int) -> str:
    return f"{subject_id}__{task_id}.svc"


def write_manifest(recordings, path) -> None:
    """Cohort manifest CSV: subject_id,label with one row per subject."""
    seen = {}
    for rec in recordings:
        seen.setdefault(rec.subject_id, rec.label)
    lines = ["subject_id,label"]
    for sid in sorted(seen):
        lines.append(f"{sid},{seen[sid]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for i, ln in enumerate(Path(path).read_text().splitlines()):
        ln = ln.strip()
        if not ln or (i == 0 and ln.lower().startswith("subject_id")):
            continue
        sid, _, label = ln.partition(",")
        if label not in (LABEL_PD, LABEL_CONTROL):
            raise RecordingError(f"{path}: line {i + 1}: label must be PD or H")
        out[sid] = label
    return out


# ---------------------------------------------------------------------------
# Synthetic cohort generator.  A stand-in for clinical data: controls write
# smooth low-frequency trajectories; simulated patients write smaller
# (shrink factor), slower (velocity factor), with 5-7 Hz tremor on the pen
# position and a noisier pressure channel.

_FS = 100  # Hz
_DT_MS = 10


def _draw_subject_params(rng, is_pd):
    if is_pd:
        return {
            "tremor_f": rng.uniform(5.0, 7.0),
            "tremor_a": rng.uniform(18.0, 28.0),
            "shrink": rng.uniform(0.4, 0.8),
            "vel": rng.uniform(0.5, 0.8),
            "p_noise": rng.uniform(0.05, 0.10),
        }
    return {
        "tremor_f": 0.0,
        "tremor_a": 0.0,
        "shrink": 1.0,
        "vel": 1.0,
        "p_noise": 0.0,
    }


def _stroke_mask(rng, n, n_strokes):
    """Pen-state array: n_strokes writing windows separated by air gaps."""
    gap_frac = rng.uniform(0.05, 0.09, size=n_strokes - 1) if n_strokes > 1 else np.empty(0)
    total_gap = float(np.sum(gap_frac))
    stroke_frac = rng.uniform(0.8, 1.2, size=n_strokes)
    stroke_frac *= (1.0 - total_gap) / np.sum(stroke_frac)
    b = np.zeros(n, dtype=np.int64)
    pos = 0.0
    for k in range(n_strokes):
        a = int(round(pos * n))
        pos += stroke_frac[k]
        z = int(round(pos * n))
        b[a:max(z, a + 2)] = 1
        if k < n_strokes - 1:
            pos += gap_frac[k]
    b[-1] = 0 if n_strokes > 1 else b[-1]
    return b


def _synth_recording(rng, subject_id, task_id, label, prm):
    base_T = 4.0 + 1.2 * task_id
    T = base_T / prm["vel"]
    n = int(round(T * _FS))
    t_ms = np.arange(n, dtype=np.int64) * _DT_MS
    ts = t_ms / 1000.0
    u = ts / ts[-1]  # writing progress in [0, 1]

    # cycle counts fixed per task so oscillation frequency scales with pace
    k_letter = rng.uniform(1.6, 2.2) * base_T
    k_y = rng.uniform(0.9, 1.3) * base_T
    amp = prm["shrink"] * rng.uniform(0.85, 1.15)
    width = 2200.0 * prm["shrink"]

    ph = rng.uniform(0, 2 * np.pi, size=6)
    x = 1200.0 + width * u \
        + amp * (40.0 * np.sin(2 * np.pi * k_letter * u + ph[0])
                 + 12.0 * np.sin(2 * np.pi * 2.3 * k_letter * u + ph[1]))
    y = 1600.0 + amp * (220.0 * np.sin(2 * np.pi * k_y * u + ph[2])
                        + 60.0 * np.sin(2 * np.pi * 1.7 * k_y * u + ph[3]))
    if prm["tremor_a"] > 0:
        x = x + prm["tremor_a"] * np.sin(2 * np.pi * prm["tremor_f"] * ts + ph[4])
        y = y + 0.4 * prm["tremor_a"] * np.sin(2 * np.pi * prm["tremor_f"] * ts + ph[5])

    n_strokes = 5 if task_id == N_TASKS else 2
    b = _stroke_mask(rng, n, n_strokes)

    pph = rng.uniform(0, 2 * np.pi, size=2)
    p = 0.45 + 0.10 * np.sin(2 * np.pi * 0.5 * ts + pph[0]) \
        + 0.08 * np.sin(2 * np.pi * 1.1 * ts + pph[1])
    noise = rng.normal(0.0, 1.0, size=n)
    if prm["p_noise"] > 0:
        p = p + prm["p_noise"] * noise
    p = np.clip(np.round(p * P_MAX), 1, P_MAX).astype(np.int64)
    p = np.where(b == 1, p, 0)

    return PenRecording(
        subject_id, task_id,
        np.round(x).astype(np.int64),
        np.round(y).astype(np.int64),
        t_ms, b, p, label=label,
    )


def synthesize_cohort(n_pd: int, n_control: int, seed: int) -> list[PenRecording]:
    """Deterministically generate n_pd + n_control subjects x 7 tasks."""
    if n_pd < 1 or n_control < 1:
        raise ValueError("counts must be >= 1")
    rng = np.random.default_rng(seed)
    recs = []
    for group, count, label in ((("pd"), n_pd, LABEL_PD), (("hc"), n_control, LABEL_CONTROL)):
        for i in range(count):
            sid = f"{group}{i:03d}"
            prm = _draw_subject_params(rng, label == LABEL_PD)
            for task in range(1, N_TASKS + 1):
                recs.append(_synth_recording(rng, sid, task, label, prm))
    return recs
