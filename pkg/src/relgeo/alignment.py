"""Cross-space similarity, correspondence extraction, map fitting, stitching.

Once two models' samples live in comparable relative-representation spaces,
rows can be matched by cosine similarity; the matched pairs then support a
least-squares (orthogonal or general linear) map between the original
latent spaces, which is all zero-shot stitching needs.

Alignment maps act on row vectors: z_aligned = z @ matrix + translation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, as_vector, lstsq, thin_svd
from .relrep import RelRepMatrix

__all__ = [
    "AlignmentMap",
    "Correspondence",
    "crossspace_similarity",
    "extract_correspondence",
    "fit_orthogonal",
    "fit_linear",
    "stitch",
    "alignment_to_dict",
    "alignment_from_dict",
]

ALIGNMENT_FORMAT_VERSION = 1


@dataclass
class AlignmentMap:
    kind: str  # "orthogonal" | "linear"
    matrix: np.ndarray  # (source_dim, target_dim)
    translation: np.ndarray  # (target_dim,)
    fit_residual: float
    underdetermined: bool = False

    def __post_init__(self):
        self.matrix = as_matrix(self.matrix, "matrix")
        self.translation = as_vector(self.translation, "translation")
        if self.translation.shape[0] != self.matrix.shape[1]:
            raise ValueError("translation length must equal target dim")
        if self.kind not in ("orthogonal", "linear"):
            raise ValueError(f"unknown alignment kind {self.kind!r}")
        if self.kind == "orthogonal":
            gram = self.matrix.T @ self.matrix
            if np.max(np.abs(gram - np.eye(gram.shape[0]))) > 1e-8:
                raise ValueError("orthogonal alignment matrix fails T^T T = I within 1e-8")

    def apply_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        return Z @ self.matrix + self.translation


@dataclass
class Correspondence:
    """Per-source-row best match into the target rows, with match scores."""

    indices: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.scores = as_vector(self.scores, "scores")
        if self.indices.shape != self.scores.shape:
            raise ValueError("indices and scores must have equal length")


def _cosine_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    a_norm = np.linalg.norm(A, axis=1)
    b_norm = np.linalg.norm(B, axis=1)
    denom = np.outer(np.where(a_norm == 0.0, 1.0, a_norm),
                     np.where(b_norm == 0.0, 1.0, b_norm))
    sim = (A @ B.T) / denom
    sim[a_norm == 0.0, :] = 0.0
    sim[:, b_norm == 0.0] = 0.0
    return sim


def crossspace_similarity(R1: RelRepMatrix, R2: RelRepMatrix) -> np.ndarray:
    """Cosine similarity between relative-representation rows of two spaces."""
    if R1.anchor_count != R2.anchor_count:
        raise ValueError(f"anchor count mismatch: {R1.anchor_count} vs {R2.anchor_count}")
    if R1.anchor_fingerprint != R2.anchor_fingerprint:
        raise ValueError("relrep matrices were built from non-corresponding anchors")
    return _cosine_rows(R1.values, R2.values)


def extract_correspondence(D) -> Correspondence:
    """Row-wise argmax matching; ties break to the smallest column index."""
    D = as_matrix(D, "D")
    indices = np.argmax(D, axis=1).astype(np.int64)
    scores = D[np.arange(D.shape[0]), indices]
    return Correspondence(indices=indices, scores=scores)


def fit_orthogonal(X, Y, center: bool = True) -> AlignmentMap:
    """Orthogonal Procrustes fit minimizing ||X T - Y||_F over orthogonal T.

    With centering enabled the row means are removed first and re-expressed
    as a translation, so the fitted map is a rigid motion of row space.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must pair rows")
    x_mean = X.mean(axis=0) if center else np.zeros(X.shape[1])
    y_mean = Y.mean(axis=0) if center else np.zeros(Y.shape[1])
    Xc = X - x_mean
    Yc = Y - y_mean
    cross = Xc.T @ Yc
    u, s, vt = thin_svd(cross)
    if not s.size or s[0] <= 0.0:
        raise ValueError("rank-0 cross-covariance; orthogonal fit undefined")
    T = u @ vt
    t = y_mean - x_mean @ T
    residual = float(np.linalg.norm(X @ T + t - Y))
    return AlignmentMap(kind="orthogonal", matrix=T, translation=t,
                        fit_residual=residual)


def fit_linear(X, Y, center: bool = False) -> AlignmentMap:
    """General least-squares linear map X -> Y.

    Without centering a bias column is appended, so an affine offset is
    always representable either way.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must pair rows")
    if center:
        x_mean = X.mean(axis=0)
        y_mean = Y.mean(axis=0)
        result = lstsq(X - x_mean, Y - y_mean)
        T = result.solution
        t = y_mean - x_mean @ T
    else:
        augmented = np.hstack([X, np.ones((X.shape[0], 1))])
        result = lstsq(augmented, Y)
        T = result.solution[:-1]
        t = result.solution[-1]
    residual = float(np.linalg.norm(X @ T + t - Y))
    return AlignmentMap(kind="linear", matrix=T, translation=t,
                        fit_residual=residual,
                        underdetermined=result.underdetermined)


def stitch(enc1, amap: AlignmentMap, dec2, X) -> np.ndarray:
    """Decode with model 2 what model 1 encoded: dec2(enc1(x) @ T + t) per row."""
    X = as_matrix(X, "X")
    latent = enc1.forward_batch(X)
    return dec2.forward_batch(amap.apply_batch(latent))


def alignment_to_dict(amap: AlignmentMap) -> dict:
    return {
        "format_version": ALIGNMENT_FORMAT_VERSION,
        "kind": amap.kind,
        "matrix": {
            "rows": amap.matrix.shape[0],
            "cols": amap.matrix.shape[1],
            "data": amap.matrix.ravel(order="C").tolist(),
        },
        "translation": amap.translation.tolist(),
        "fit_residual": amap.fit_residual,
        "underdetermined": amap.underdetermined,
    }


def alignment_from_dict(doc: dict) -> AlignmentMap:
    if doc.get("format_version") != ALIGNMENT_FORMAT_VERSION:
        raise ValueError(f"unsupported alignment format_version {doc.get('format_version')!r}")
    m = doc["matrix"]
    matrix = np.asarray(m["data"], dtype=np.float64).reshape(int(m["rows"]), int(m["cols"]))
    return AlignmentMap(kind=doc["kind"], matrix=matrix,
                        translation=np.asarray(doc["translation"], dtype=np.float64),
                        fit_residual=float(doc["fit_residual"]),
                        underdetermined=bool(doc.get("underdetermined", False)))
