"""Retrieval and agreement metrics: MRR, Spearman rank correlation, MSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, as_vector

__all__ = ["MrrResult", "mrr", "spearman", "reconstruction_mse"]


@dataclass
class MrrResult:
    mrr: float
    ranks: np.ndarray  # 1-based rank of the true counterpart per query row
    symmetric: bool


def mrr(D, ground_truth, higher_is_better: bool = True,
        symmetric: bool = False, exclude_diagonal: bool = False) -> MrrResult:
    """Mean reciprocal rank of the true counterpart within each query row.

    Tie handling is pessimistic and deterministic: a query's rank counts
    every strictly better column plus every equal-valued column with a
    smaller index, plus one. With symmetric=True the (square) matrix is
    replaced by (D + D^T) / 2 first. exclude_diagonal drops self-matches
    when a space is queried against itself for diagnostics; cross-model
    retrieval keeps all columns.
    """
    D = as_matrix(D, "D")
    gt = np.ascontiguousarray(ground_truth, dtype=np.int64)
    n_rows, n_cols = D.shape
    if gt.shape != (n_rows,):
        raise ValueError("need one ground-truth column index per row")
    if gt.size and (gt.min() < 0 or gt.max() >= n_cols):
        raise ValueError("ground-truth indices out of column range")
    if symmetric:
        if n_rows != n_cols:
            raise ValueError("symmetric MRR requires a square matrix")
        D = 0.5 * (D + D.T)
    if exclude_diagonal and n_rows == n_cols:
        D = D.copy()
        fill = -np.inf if higher_is_better else np.inf
        np.fill_diagonal(D, fill)

    rows = np.arange(n_rows)
    truth = D[rows, gt]
    if higher_is_better:
        strictly_better = (D > truth[:, None]).sum(axis=1)
    else:
        strictly_better = (D < truth[:, None]).sum(axis=1)
    equal = D == truth[:, None]
    earlier = np.arange(n_cols)[None, :] < gt[:, None]
    equal_earlier = (equal & earlier).sum(axis=1)
    ranks = strictly_better + equal_earlier + 1
    value = float(np.mean(1.0 / ranks)) if n_rows else 0.0
    return MrrResult(mrr=value, ranks=ranks.astype(np.int64), symmetric=symmetric)


def _fractional_ranks(v: np.ndarray) -> np.ndarray:
    """Average (fractional) ranks, ties sharing the mean of their positions."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.shape[0])
    sorted_v = v[order]
    i = 0
    while i < v.shape[0]:
        j = i
        while j + 1 < v.shape[0] and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of fractional ranks."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape != y.shape or x.shape[0] < 2:
        raise ValueError("need two equal-length vectors with at least 2 entries")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("spearman undefined for a constant vector")
    rx = _fractional_ranks(x)
    ry = _fractional_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    value = float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))
    return min(1.0, max(-1.0, value))


def reconstruction_mse(Xhat, X) -> float:
    """Mean squared entrywise error between a reconstruction and its target."""
    Xhat = as_matrix(Xhat, "Xhat")
    X = as_matrix(X, "X")
    if Xhat.shape != X.shape:
        raise ValueError(f"shape mismatch: {Xhat.shape} vs {X.shape}")
    diff = Xhat - X
    return float(np.mean(diff * diff))
