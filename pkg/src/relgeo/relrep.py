"""Anchor selection and relative-representation matrices.

A relative representation describes each sample by its similarity or
intrinsic distance to a fixed set of anchor samples, replacing the
model-specific absolute coordinates with an anchor-relative frame that
can be compared across independently trained models.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import MetricError, OutputMetric, straight_line_quantities_batch
from .models import Decoder
from .numerics import RngStream, as_matrix

__all__ = [
    "AnchorSet",
    "RelRepMatrix",
    "anchor_fingerprint",
    "select_anchors",
    "anchors_from_indices",
    "combine_anchor_indices",
    "relrep_cosine",
    "relrep_geodesic",
]

RELREP_MODES = ("cosine", "geo-length", "geo-energy")


def anchor_fingerprint(indices: np.ndarray) -> str:
    """Stable digest of the ordered anchor identity (dataset indices).

    Two anchor sets correspond exactly when they reference the same dataset
    rows in the same column order, regardless of which model embedded them,
    so the latent values are deliberately left out of the digest.
    """
    payload = np.ascontiguousarray(indices, dtype=np.int64).tobytes()
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


@dataclass
class AnchorSet:
    indices: np.ndarray  # unique indices into the dataset
    latent: np.ndarray  # (k, latent_dim) rows of the embedding at those indices
    scheme: str
    seed: tuple[int, int] | None = None

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.latent = as_matrix(self.latent, "latent")
        if self.indices.ndim != 1:
            raise ValueError("indices must be 1-D")
        if len(np.unique(self.indices)) != len(self.indices):
            raise ValueError("anchor indices must be unique")
        if self.latent.shape[0] != self.indices.shape[0]:
            raise ValueError("latent row count must equal number of indices")

    @property
    def count(self) -> int:
        return self.indices.shape[0]

    def fingerprint(self) -> str:
        return anchor_fingerprint(self.indices)


@dataclass
class RelRepMatrix:
    """samples x anchors matrix of similarities or geodesic quantities."""

    values: np.ndarray
    mode: str
    anchor_fingerprint: str
    metric: str | None = None
    steps: int | None = None

    def __post_init__(self):
        self.values = as_matrix(self.values, "values")
        if self.mode not in RELREP_MODES:
            raise ValueError(f"unknown relrep mode {self.mode!r}")
        if self.mode == "cosine":
            if np.any(self.values < -1.0 - 1e-12) or np.any(self.values > 1.0 + 1e-12):
                raise ValueError("cosine relrep values must lie in [-1, 1]")
        elif np.any(self.values < 0.0):
            raise ValueError("geodesic relrep values must be non-negative")

    @property
    def anchor_count(self) -> int:
        return self.values.shape[1]


def _fps_indices(Z: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    """Greedy max-min (farthest point) sampling; first point uniform."""
    n = Z.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = gen.integers(n)
    min_dist = np.linalg.norm(Z - Z[chosen[0]], axis=1)
    for i in range(1, k):
        nxt = int(np.argmax(min_dist))  # ties resolve to the smallest index
        chosen[i] = nxt
        min_dist = np.minimum(min_dist, np.linalg.norm(Z - Z[nxt], axis=1))
    return chosen


def _kmeans_indices(Z: np.ndarray, k: int, gen: np.random.Generator,
                    iters: int = 50) -> np.ndarray:
    """Lloyd iterations, then the nearest data point to each centroid."""
    n = Z.shape[0]
    centroids = Z[gen.choice(n, size=k, replace=False)].copy()
    for _ in range(iters):
        d2 = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        for c in range(k):
            members = Z[assign == c]
            if members.shape[0]:
                centroids[c] = members.mean(axis=0)
    d2 = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argmin(d2, axis=0).astype(np.int64)
    # Dedup preserving order, then top up uniformly to k.
    seen: list[int] = []
    for idx in nearest:
        if idx not in seen:
            seen.append(int(idx))
    if len(seen) < k:
        remaining = np.setdiff1d(np.arange(n, dtype=np.int64), np.array(seen, dtype=np.int64))
        extra = gen.choice(remaining, size=k - len(seen), replace=False)
        seen.extend(int(e) for e in extra)
    return np.array(seen, dtype=np.int64)


def select_anchors(Z, k: int, scheme: str, rng: RngStream) -> AnchorSet:
    """Pick k anchor rows of Z by the given scheme (uniform | fps | kmeans)."""
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    if k > n:
        raise ValueError(f"cannot select {k} anchors from {n} rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    gen = rng.generator()
    if scheme == "uniform":
        indices = np.sort(gen.choice(n, size=k, replace=False)).astype(np.int64)
    elif scheme == "fps":
        indices = _fps_indices(Z, k, gen)
    elif scheme == "kmeans":
        indices = _kmeans_indices(Z, k, gen)
    else:
        raise ValueError(f"unknown anchor scheme {scheme!r}")
    return AnchorSet(indices=indices, latent=Z[indices], scheme=scheme,
                     seed=(rng.seed, rng.stream_id))


def anchors_from_indices(Z, indices, scheme: str = "given") -> AnchorSet:
    """Anchor set at explicitly supplied dataset indices (e.g. a shared draw)."""
    Z = as_matrix(Z, "Z")
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= Z.shape[0]):
        raise ValueError("anchor indices out of range")
    return AnchorSet(indices=indices, latent=Z[indices], scheme=scheme)


def combine_anchor_indices(index_lists: list[np.ndarray], k: int,
                           rng: RngStream) -> np.ndarray:
    """Merge per-model anchor selections: union, then seeded subsample to k."""
    union = np.unique(np.concatenate([np.ascontiguousarray(ix, dtype=np.int64)
                                      for ix in index_lists]))
    if union.size < k:
        raise ValueError(f"union holds {union.size} anchors, cannot subsample {k}")
    gen = rng.generator()
    picked = gen.choice(union.size, size=k, replace=False)
    return np.sort(union[picked])


def relrep_cosine(Z, anchors: AnchorSet) -> RelRepMatrix:
    """Cosine similarity of every sample row against every anchor row."""
    Z = as_matrix(Z, "Z")
    if Z.shape[1] != anchors.latent.shape[1]:
        raise ValueError("sample and anchor latent dimensions differ")
    z_norm = np.linalg.norm(Z, axis=1)
    a_norm = np.linalg.norm(anchors.latent, axis=1)
    if np.any(z_norm == 0.0) or np.any(a_norm == 0.0):
        warnings.warn("zero-norm latent vector in cosine relrep; its similarities are 0",
                      RuntimeWarning, stacklevel=2)
    denom = np.outer(np.where(z_norm == 0.0, 1.0, z_norm),
                     np.where(a_norm == 0.0, 1.0, a_norm))
    values = (Z @ anchors.latent.T) / denom
    values[z_norm == 0.0, :] = 0.0
    values[:, a_norm == 0.0] = 0.0
    np.clip(values, -1.0, 1.0, out=values)
    return RelRepMatrix(values=values, mode="cosine",
                        anchor_fingerprint=anchors.fingerprint())


def relrep_geodesic(Z, anchors: AnchorSet, dec: Decoder, metric: OutputMetric,
                    steps: int = 8, mode: str = "length") -> RelRepMatrix:
    """Straight-line pullback quantity from every sample to every anchor.

    Entry (i, j) is the decoded straight-segment length (or energy) between
    sample i and anchor j; a sample that coincides with an anchor gets an
    exact 0 in that column.
    """
    Z = as_matrix(Z, "Z")
    if mode not in ("length", "energy"):
        raise ValueError(f"unknown geodesic mode {mode!r}")
    if Z.shape[1] != dec.input_dim:
        raise ValueError("latent dim does not match decoder input dim")
    if anchors.latent.shape[1] != Z.shape[1]:
        raise ValueError("sample and anchor latent dimensions differ")
    n, k = Z.shape[0], anchors.count
    Z0 = np.repeat(Z, k, axis=0)
    Z1 = np.tile(anchors.latent, (n, 1))
    try:
        flat = straight_line_quantities_batch(dec, metric, Z0, Z1,
                                              steps=steps, mode=mode)
    except MetricError as exc:
        if exc.row is None:
            raise
        i, j = divmod(exc.row, k)
        raise MetricError(f"metric failure at sample {i}, anchor {j}: {exc}",
                          row=exc.row) from exc
    values = flat.reshape(n, k)
    if not np.all(np.isfinite(values)):
        i, j = divmod(int(np.flatnonzero(~np.isfinite(values.ravel()))[0]), k)
        raise ValueError(f"non-finite relrep value at sample {i}, anchor {j}")
    return RelRepMatrix(values=values, mode=f"geo-{mode}",
                        anchor_fingerprint=anchors.fingerprint(),
                        metric=metric.name, steps=steps)
