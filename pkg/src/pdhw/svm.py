"""RBF-kernel SVM trained by SMO, stratified cross-validated grid search
over (C, gamma), AUC scoring, and the per-task / per-modality
evaluation grid.

The kernel uses the width convention K(u, v) = exp(-||u-v||^2 / (2 g^2));
for the common multiplier convention use multiplier = 1 / (2 g^2).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import rankdata

from .featurize import FeatureMatrix, fit_preprocessor

DEFAULT_C_GRID = tuple(2.0 ** k for k in range(-10, 8))    # 18 values
DEFAULT_GAMMA_GRID = tuple(2.0 ** k for k in range(-7, 8))  # 15 values

_TAU = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class RbfParams:
    C: float
    gamma_width: float

    def __post_init__(self):
        if self.C <= 0 or self.gamma_width <= 0:
            raise ValueError("C and gamma_width must be positive")


def _sq_dists(a, b):
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def rbf_kernel(u, v, gamma_width: float) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    d = u - v
    return float(np.exp(-np.dot(d, d) / (2.0 * gamma_width ** 2)))


def kernel_matrix(a, b, gamma_width: float) -> np.ndarray:
    return np.exp(-_sq_dists(np.asarray(a, float), np.asarray(b, float))
                  / (2.0 * gamma_width ** 2))


def _smo_solve(K, y, C, tol=1e-3, max_iter=100_000):
    """Dual solver with second-order working-pair selection.

    Minimizes 1/2 a'Qa - e'a subject to 0 <= a <= C, y'a = 0, with
    Q = yy' * K.  Returns (alpha, bias).
    """
    n = len(y)
    y = y.astype(float)
    Q = K * np.outer(y, y)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    eps = 1e-12
    residual = np.inf
    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < C - eps))
        if not up.any() or not low.any():
            residual = 0.0
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        m_val = yg[i]
        M_val = float(np.min(np.where(low, yg, np.inf)))
        residual = m_val - M_val
        if residual < tol:
            break
        # second-order selection of j among violating candidates
        b_vec = m_val - yg
        a_vec = K[i, i] + np.diag(K) - 2.0 * K[i, :]
        a_vec = np.where(a_vec <= 0, _TAU, a_vec)
        cand = low & (yg < m_val)
        score = np.where(cand, -(b_vec ** 2) / a_vec, np.inf)
        j = int(np.argmin(score))

        # unconstrained step, then clip to the box
        delta = b_vec[j] / a_vec[j]
        if y[i] > 0:
            lo_i, hi_i = -alpha[i], C - alpha[i]
        else:
            lo_i, hi_i = alpha[i] - C, alpha[i]
        if y[j] > 0:
            lo_j, hi_j = alpha[j] - C, alpha[j]
        else:
            lo_j, hi_j = -alpha[j], C - alpha[j]
        delta = min(delta, hi_i, hi_j)
        delta = max(delta, lo_i, lo_j, 0.0)
        if delta <= 0:
            break
        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        grad += Q[:, i] * (y[i] * delta) - Q[:, j] * (y[j] * delta)
    else:
        raise ConvergenceError(f"SMO did not converge (residual {residual:.3g})", residual)

    if residual >= tol:
        raise ConvergenceError(f"SMO stalled (residual {residual:.3g})", residual)

    yg = -y * grad
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        bias = float(np.mean(yg[free]))
    else:
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < C - eps))
        hi = np.max(yg[up]) if up.any() else 0.0
        lo = np.min(yg[low]) if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return alpha, bias


@dataclass
class TrainedModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i over support vectors
    bias: float
    params: RbfParams
    alpha: np.ndarray      # full alpha vector (training order)
    train_labels: np.ndarray

    def decision_function(self, X) -> np.ndarray:
        K = kernel_matrix(np.asarray(X, float), self.support_vectors,
                          self.params.gamma_width)
        return K @ self.dual_coef + self.bias


def train_smo(X, y, params: RbfParams, tol: float = 1e-3,
              max_iter: int = 100_000) -> TrainedModel:
    """Fit the RBF SVM dual; X must be fully imputed, y in {-1, +1}."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("labels must contain both -1 and +1")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    K = kernel_matrix(X, X, params.gamma_width)
    alpha, bias = _smo_solve(K, y, params.C, tol=tol, max_iter=max_iter)
    sv = alpha > 1e-12
    return TrainedModel(X[sv], (alpha * y)[sv], bias, params, alpha, y)


def auc(scores, labels) -> float | None:
    """P(random positive outscores random negative), ties counted 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    return float((np.sum(ranks[pos]) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold assignment: per-class shuffle, then
    round-robin deal."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    folds = [[] for _ in range(k)]
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            folds[pos % k].append(int(i))
    return [np.sort(np.asarray(f, dtype=int)) for f in folds]


@dataclass
class CvReport:
    best_C: float
    best_gamma: float
    mean_auc: float | None
    fold_aucs: list[float | None]
    seed: int
    folds: int
    protocol: str  # "fold-safe" or "paper"
    grid_points: int = 0
    nested: bool = False
    per_fold_params: list | None = None


def _fold_plan(matrix: FeatureMatrix, folds: int, seed: int):
    counts = np.bincount(matrix.labels, minlength=2)
    feasible = int(min(counts))
    k = folds
    if feasible < folds:
        k = max(2, feasible)
        warnings.warn(f"reducing fold count {folds} -> {k}: smallest class has "
                      f"{feasible} subjects")
    return stratified_folds(matrix.labels, k, seed)


def _prepare_fold(matrix, train_idx, test_idx, alpha, preproc=None):
    pp = preproc if preproc is not None else fit_preprocessor(
        matrix, train_idx, alpha=alpha)
    if pp is None:
        return None
    Xtr = pp.transform(matrix.values[train_idx])
    Xte = pp.transform(matrix.values[test_idx])
    ytr = np.where(matrix.labels[train_idx] == 1, 1.0, -1.0)
    return {
        "Dtr": _sq_dists(Xtr, Xtr),
        "Dte": _sq_dists(Xte, Xtr),
        "ytr": ytr,
        "yte": matrix.labels[test_idx],
    }


def _point_mean_auc(prepared, C, gamma):
    aucs = []
    for f in prepared:
        if f is None:
            aucs.append(None)
            continue
        Ktr = np.exp(-f["Dtr"] / (2.0 * gamma ** 2))
        try:
            alpha_vec, bias = _smo_solve(Ktr, f["ytr"], C)
        except ConvergenceError:
            aucs.append(None)
            continue
        Kte = np.exp(-f["Dte"] / (2.0 * gamma ** 2))
        scores = Kte @ (alpha_vec * f["ytr"]) + bias
        aucs.append(auc(scores, f["yte"]))
    valid = [a for a in aucs if a is not None]
    return (float(np.mean(valid)) if valid else None), aucs


def grid_search_cv(matrix: FeatureMatrix, c_grid=None, gamma_grid=None,
                   folds: int = 10, seed: int = 0, alpha: float | None = None,
                   paper_protocol: bool = False, n_jobs: int = 1) -> CvReport:
    """Mean held-out AUC over stratified folds for every (C, gamma); the
    report carries the maximizing point.

    alpha, when given, applies the Mann-Whitney filter inside training
    folds (fold-safe mode).  paper_protocol fits imputation and
    normalization once on the whole matrix instead.
    """
    c_grid = tuple(c_grid) if c_grid is not None else DEFAULT_C_GRID
    gamma_grid = tuple(gamma_grid) if gamma_grid is not None else DEFAULT_GAMMA_GRID
    fold_idx = _fold_plan(matrix, folds, seed)
    all_idx = np.arange(matrix.n_subjects)

    shared_pp = None
    if paper_protocol:
        shared_pp = fit_preprocessor(matrix, all_idx, alpha=None)
        if shared_pp is None:
            return CvReport(c_grid[0], gamma_grid[0], None, [], seed,
                            len(fold_idx), "paper", len(c_grid) * len(gamma_grid))

    prepared = []
    for f in fold_idx:
        train = np.setdiff1d(all_idx, f)
        prepared.append(_prepare_fold(matrix, train, f,
                                      None if paper_protocol else alpha,
                                      preproc=shared_pp))

    points = [(C, g) for C in c_grid for g in gamma_grid]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_point_mean_auc)(prepared, C, g) for C, g in points)

    best = None
    for (C, g), (mean_auc, aucs) in zip(points, results):
        if mean_auc is None:
            continue
        if best is None or mean_auc > best[0]:
            best = (mean_auc, C, g, aucs)
    protocol = "paper" if paper_protocol else "fold-safe"
    if best is None:
        return CvReport(c_grid[0], gamma_grid[0], None, [], seed,
                        len(fold_idx), protocol, len(points))
    mean_auc, C, g, aucs = best
    return CvReport(C, g, mean_auc, aucs, seed, len(fold_idx), protocol, len(points))


def nested_cv(matrix: FeatureMatrix, c_grid=None, gamma_grid=None,
              folds: int = 10, inner_folds: int = 5, seed: int = 0,
              alpha: float | None = None, n_jobs: int = 1) -> CvReport:
    """Unbiased estimate: inner grid selection per outer training fold."""
    c_grid = tuple(c_grid) if c_grid is not None else DEFAULT_C_GRID
    gamma_grid = tuple(gamma_grid) if gamma_grid is not None else DEFAULT_GAMMA_GRID
    fold_idx = _fold_plan(matrix, folds, seed)
    all_idx = np.arange(matrix.n_subjects)
    fold_aucs, per_fold_params = [], []
    for f in fold_idx:
        train = np.setdiff1d(all_idx, f)
        inner = FeatureMatrix(matrix.feature_names, matrix.values[train],
                              matrix.labels[train],
                              [matrix.subject_ids[i] for i in train],
                              matrix.task_id, matrix.modality)
        rep = grid_search_cv(inner, c_grid, gamma_grid, folds=inner_folds,
                             seed=seed, alpha=alpha, n_jobs=n_jobs)
        if rep.mean_auc is None:
            fold_aucs.append(None)
            per_fold_params.append(None)
            continue
        prep = _prepare_fold(matrix, train, f, alpha)
        if prep is None:
            fold_aucs.append(None)
            per_fold_params.append(None)
            continue
        _, aucs = _point_mean_auc([prep], rep.best_C, rep.best_gamma)
        fold_aucs.append(aucs[0])
        per_fold_params.append((rep.best_C, rep.best_gamma))
    valid = [a for a in fold_aucs if a is not None]
    mean_auc = float(np.mean(valid)) if valid else None
    best = next((p for p in per_fold_params if p), (c_grid[0], gamma_grid[0]))
    return CvReport(best[0], best[1], mean_auc, fold_aucs, seed, len(fold_idx),
                    "fold-safe", len(c_grid) * len(gamma_grid), nested=True,
                    per_fold_params=per_fold_params)


# ---------------------------------------------------------------------------
# Evaluation grid (tasks x modalities)


@dataclass
class EvaluationReport:
    cells: dict = field(default_factory=dict)  # (modality, task_key) -> dict
    seed: int = 0
    alpha: float = 0.05
    folds: int = 10
    protocol: str = "fold-safe"
    nested: bool = False
    meta: dict = field(default_factory=dict)

    TASK_KEYS = tuple(list(range(1, 8)) + ["all"])

    def cell(self, modality, task_key):
        return self.cells.get((modality, str(task_key)))

    def to_json(self) -> str:
        payload = {
            "meta": self.meta,
            "seed": self.seed,
            "alpha": self.alpha,
            "folds": self.folds,
            "protocol": self.protocol,
            "nested": self.nested,
            "cells": [
                {"modality": mod, "task": task, **info}
                for (mod, task), info in sorted(self.cells.items())
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        payload = json.loads(text)
        rep = cls(seed=payload["seed"], alpha=payload["alpha"],
                  folds=payload["folds"], protocol=payload["protocol"],
                  nested=payload["nested"], meta=payload["meta"])
        for cell in payload["cells"]:
            info = {k: v for k, v in cell.items() if k not in ("modality", "task")}
            rep.cells[(cell["modality"], cell["task"])] = info
        return rep

    def render_table(self) -> str:
        from .ingest import MODALITIES
        lines = []
        header = f"{'task/modality':>14}" + "".join(f"{m:>14}" for m in MODALITIES)
        lines.append(header)
        lines.append("-" * len(header))
        for task in self.TASK_KEYS:
            row = [f"{task:>14}"]
            for mod in MODALITIES:
                info = self.cell(mod, task)
                val = info.get("auc") if info else None
                row.append(f"{100 * val:>14.2f}" if val is not None else f"{'-':>14}")
            lines.append("".join(row))
        return "\n".join(lines)


def evaluate_matrices(matrices: dict, alpha: float = 0.05, folds: int = 10,
                      seed: int = 0, paper_protocol: bool = False,
                      nested: bool = False, c_grid=None, gamma_grid=None,
                      n_jobs: int = 1) -> EvaluationReport:
    """Run the grid search on every (modality, task) matrix plus an
    'all tasks' concatenation per modality.

    ``matrices`` maps (task_id, modality) -> FeatureMatrix.  Cells where
    no feature survives filtering are reported with auc None ("-").
    """
    from .featurize import concat_matrices
    from .ingest import MODALITIES, N_TASKS

    report = EvaluationReport(seed=seed, alpha=alpha, folds=folds,
                              protocol="paper" if paper_protocol else "fold-safe",
                              nested=nested)

    def run_cell(matrix):
        work = matrix
        if paper_protocol:
            from .featurize import filter_features
            work, _ = filter_features(matrix, alpha)
            if work.n_features == 0:
                return {"auc": None, "C": None, "gamma": None,
                        "fold_aucs": [], "n_features": 0}
            rep = grid_search_cv(work, c_grid, gamma_grid, folds=folds,
                                 seed=seed, alpha=None, paper_protocol=True,
                                 n_jobs=n_jobs)
        elif nested:
            rep = nested_cv(work, c_grid, gamma_grid, folds=folds, seed=seed,
                            alpha=alpha, n_jobs=n_jobs)
        else:
            rep = grid_search_cv(work, c_grid, gamma_grid, folds=folds,
                                 seed=seed, alpha=alpha, n_jobs=n_jobs)
        return {"auc": rep.mean_auc, "C": rep.best_C if rep.mean_auc is not None else None,
                "gamma": rep.best_gamma if rep.mean_auc is not None else None,
                "fold_aucs": rep.fold_aucs, "n_features": work.n_features}

    for modality in MODALITIES:
        per_task = []
        for task in range(1, N_TASKS + 1):
            m = matrices.get((task, modality))
            if m is None:
                continue
            per_task.append(m)
            report.cells[(modality, str(task))] = run_cell(m)
        if per_task:
            all_m = concat_matrices(per_task, modality)
            report.cells[(modality, "all")] = run_cell(all_m)
    return report
