"""Empirical mode decomposition by sifting with natural cubic spline
envelopes, plus the intrinsic (IMF-based) feature set.

Envelope boundary handling mirrors the two extrema nearest each end
across the signal edge.  Sifting of one component stops on a Cauchy
criterion (SD < 0.2) once the component satisfies the IMF condition
(|#extrema - #zero crossings| <= 1); decomposition stops when the
residual is monotone, has fewer than 3 extrema, or 10 components have
been extracted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import nonlinear

MAX_IMFS = 10
SD_THRESHOLD = 0.2
MIN_SIFT_ITERS = 10  # nominal cap; extended only to satisfy the IMF condition
HARD_SIFT_CAP = 50


@dataclass
class Decomposition:
    imfs: list[np.ndarray] = field(default_factory=list)
    residual: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def source_length(self) -> int:
        return len(self.residual)

    def reconstruct(self) -> np.ndarray:
        out = self.residual.copy()
        for imf in self.imfs:
            out = out + imf
        return out


def find_extrema(s):
    """Interior local maxima and minima (index, value) arrays with the
    plateau rule: an equal-value run higher/lower than both neighbors is
    one extremum, placed at the run's middle sample."""
    s = np.asarray(s, dtype=float)
    n = len(s)
    if n < 3:
        return np.empty(0, int), np.empty(0), np.empty(0, int), np.empty(0)
    keep = np.ones(n, dtype=bool)
    keep[1:] = s[1:] != s[:-1]
    idx = np.nonzero(keep)[0]  # run start indices
    c = s[idx]
    if len(c) < 3:
        return np.empty(0, int), np.empty(0), np.empty(0, int), np.empty(0)
    d = np.sign(np.diff(c))
    is_max = (d[:-1] > 0) & (d[1:] < 0)
    is_min = (d[:-1] < 0) & (d[1:] > 0)
    # run k spans idx[k] .. idx[k+1]-1; place the extremum mid-run
    run_end = np.append(idx[1:], n) - 1
    mid = (idx + run_end) // 2
    max_i = mid[1:-1][is_max]
    min_i = mid[1:-1][is_min]
    return max_i, s[max_i], min_i, s[min_i]


def count_zero_crossings(s) -> int:
    s = np.asarray(s, dtype=float)
    sg = np.sign(s)
    sg = sg[sg != 0]
    if len(sg) < 2:
        return 0
    return int(np.sum(sg[:-1] != sg[1:]))


def is_imf(s) -> bool:
    max_i, _, min_i, _ = find_extrema(s)
    return abs((len(max_i) + len(min_i)) - count_zero_crossings(s)) <= 1


def _mirrored_envelope(pos, val, n):
    """Natural cubic spline through the extrema, with the two extrema
    nearest each end reflected across the signal edges."""
    left_p, left_v = [], []
    for k in (1, 0):
        if k < len(pos) and -pos[k] < pos[0]:
            left_p.append(-pos[k])
            left_v.append(val[k])
    right_p, right_v = [], []
    for k in (len(pos) - 1, len(pos) - 2):
        if k >= 0:
            rp = 2 * (n - 1) - pos[k]
            if rp > pos[-1]:
                right_p.append(rp)
                right_v.append(val[k])
    xs = np.concatenate([left_p, pos, right_p]).astype(float)
    ys = np.concatenate([left_v, val, right_v]).astype(float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    # guard against coincident knots after mirroring
    uniq = np.ones(len(xs), dtype=bool)
    uniq[1:] = np.diff(xs) > 0
    xs, ys = xs[uniq], ys[uniq]
    spline = CubicSpline(xs, ys, bc_type="natural")
    return spline(np.arange(n))


def _envelope_mean(s):
    max_i, max_v, min_i, min_v = find_extrema(s)
    if len(max_i) < 2 or len(min_i) < 2:
        return None
    n = len(s)
    upper = _mirrored_envelope(max_i, max_v, n)
    lower = _mirrored_envelope(min_i, min_v, n)
    return (upper + lower) / 2.0


def _is_monotone(s) -> bool:
    d = np.diff(s)
    return bool(np.all(d >= 0) or np.all(d <= 0))


def _sift_one(r):
    """Extract one IMF from the residual, or None when impossible."""
    h = np.asarray(r, dtype=float).copy()
    for it in range(HARD_SIFT_CAP):
        mean = _envelope_mean(h)
        if mean is None:
            return h if it > 0 and is_imf(h) else None
        h_new = h - mean
        denom = float(np.sum(h * h))
        sd = float(np.sum((h - h_new) ** 2)) / denom if denom > 0 else 0.0
        h = h_new
        converged = sd < SD_THRESHOLD or it + 1 >= MIN_SIFT_ITERS
        if converged and is_imf(h):
            return h
    return h if is_imf(h) else None


def sift(s) -> Decomposition:
    """Decompose a signal into IMFs plus a residual trend."""
    s = np.asarray(s, dtype=float)
    n = len(s)
    max_i, _, min_i, _ = find_extrema(s)
    if n < 8 or len(max_i) + len(min_i) < 4:
        return Decomposition([], s.copy())
    imfs = []
    r = s.copy()
    while len(imfs) < MAX_IMFS:
        max_i, _, min_i, _ = find_extrema(r)
        if _is_monotone(r) or len(max_i) + len(min_i) < 3:
            break
        imf = _sift_one(r)
        if imf is None:
            break
        imfs.append(imf)
        r = r - imf
    return Decomposition(imfs, r)


_IMF_FEATURES = ("shannon", "renyi2", "renyi3", "ce", "tke1", "noise")


def intrinsic_features(d: Decomposition) -> dict[str, float | None]:
    """Entropy / energy / noise measures of IMF1 and IMF2."""
    out: dict[str, float | None] = {}
    for j in (1, 2):
        imf = d.imfs[j - 1] if len(d.imfs) >= j else None
        feats = nonlinear.channel_features(imf) if imf is not None else {}
        for name in _IMF_FEATURES:
            out[f"imf{j}_{name}"] = feats.get(name)
    return out


def intrinsic_snr(d: Decomposition, include_residual: bool = True) -> float | None:
    """Energy of the first two IMFs over the energy of the remaining
    components (and residual, by default)."""
    if len(d.imfs) < 3:
        return None
    num = nonlinear.conventional_energy(d.imfs[0]) + nonlinear.conventional_energy(d.imfs[1])
    den = sum(nonlinear.conventional_energy(imf) for imf in d.imfs[2:])
    if include_residual:
        den += nonlinear.conventional_energy(d.residual)
    if den == 0:
        return None
    return num / den
