"""Entropy, energy, noise and SNR measures of a single channel.

Entropies use a plug-in histogram estimator with ceil(sqrt(N))
equal-width bins over [min, max] and natural logarithms.  Empty bins
contribute nothing (0 * ln 0 := 0).
"""
from __future__ import annotations

import math

import numpy as np


def _histogram_probs(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    n = len(s)
    lo, hi = float(np.min(s)), float(np.max(s))
    if lo == hi:
        return np.array([1.0])
    bins = math.ceil(math.sqrt(n))
    counts, _ = np.histogram(s, bins=bins, range=(lo, hi))
    return counts / n


def shannon_entropy(s) -> float:
    if len(s) < 4:
        raise ValueError("need at least 4 samples")
    p = _histogram_probs(s)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def renyi_entropy(s, order: int) -> float:
    if order < 2:
        raise ValueError("order must be >= 2")
    if len(s) < 4:
        raise ValueError("need at least 4 samples")
    p = _histogram_probs(s)
    p = p[p > 0]
    return float(np.log(np.sum(p ** order)) / (1 - order))


def conventional_energy(s) -> float:
    """Mean of squares."""
    s = np.asarray(s, dtype=float)
    if len(s) < 1:
        raise ValueError("empty signal")
    return float(np.mean(s * s))


def teager_kaiser_energy(s, r: int = 1) -> float:
    """Mean of s[n]^2 - s[n+r] s[n-r] over the valid range n in [r, N-r-1]."""
    s = np.asarray(s, dtype=float)
    n = len(s)
    if r < 1:
        raise ValueError("lag must be positive")
    if n < 2 * r + 2:
        raise ValueError("signal too short for lag")
    core = s[r:n - r]
    return float(np.mean(core * core - s[2 * r:] * s[:n - 2 * r]))


def noise_variance(s) -> float:
    """First-difference noise estimate: sum of squared successive
    differences over 2(N-1)."""
    s = np.asarray(s, dtype=float)
    n = len(s)
    if n < 3:
        raise ValueError("need at least 3 samples")
    d = np.diff(s)
    return float(np.sum(d * d) / (2 * (n - 1)))


def snr(s, energy_kind: str = "ce") -> float | None:
    """Energy / estimated noise variance; None for (near-)constant input.

    energy_kind: "ce" or "tke1" / "tke2" / "tke3".
    """
    nv = noise_variance(s)
    if nv == 0:
        return None
    if energy_kind == "ce":
        e = conventional_energy(s)
    elif energy_kind.startswith("tke"):
        e = teager_kaiser_energy(s, int(energy_kind[3:]))
    else:
        raise ValueError(f"unknown energy kind {energy_kind!r}")
    return e / nv


def channel_features(s) -> dict[str, float | None]:
    """The full scalar inventory for one channel; None where the signal
    is too short or degenerate."""
    s = np.asarray(s, dtype=float)
    out: dict[str, float | None] = {
        "shannon": None, "renyi2": None, "renyi3": None,
        "ce": None, "tke1": None, "tke2": None, "tke3": None,
        "noise": None, "snr_ce": None,
        "snr_tke1": None, "snr_tke2": None, "snr_tke3": None,
    }
    n = len(s)
    if n >= 4:
        out["shannon"] = shannon_entropy(s)
        out["renyi2"] = renyi_entropy(s, 2)
        out["renyi3"] = renyi_entropy(s, 3)
    if n >= 1:
        out["ce"] = conventional_energy(s)
    for r in (1, 2, 3):
        if n >= 2 * r + 2:
            out[f"tke{r}"] = teager_kaiser_energy(s, r)
    if n >= 3:
        out["noise"] = noise_variance(s)
        if out["noise"] > 0:
            out["snr_ce"] = out["ce"] / out["noise"]
            for r in (1, 2, 3):
                if out[f"tke{r}"] is not None:
                    out[f"snr_tke{r}"] = out[f"tke{r}"] / out["noise"]
    return out
