"""Dense linear algebra and seeded randomness shared by every other module.

Matrices are 2-D float64 numpy arrays in row-major (C) order; vectors are
1-D float64 arrays. All public operations validate shapes and guarantee
finite outputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "RngStream",
    "SvdConvergenceError",
    "LstsqResult",
    "as_matrix",
    "as_vector",
    "matmul",
    "thin_svd",
    "lstsq",
    "random_orthogonal",
]


class SvdConvergenceError(RuntimeError):
    """SVD iteration failed to converge; carries the achieved residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _stream_id_from_name(name: str) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """A named, splittable random stream.

    The pair (seed, stream_id) fully determines the draw sequence: the
    underlying generator is counter-based (Philox) keyed by both values,
    so identical pairs reproduce bit-identical draws on every run and
    thread schedule. There is no global RNG state anywhere in the package;
    concurrent tasks must each own a stream obtained via :meth:`split`.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.stream_id < 2**64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def split(self, name: str) -> "RngStream":
        """Derive an independent child stream from a stable string label."""
        mixed = _stream_id_from_name(f"{self.stream_id:016x}:{name}")
        return RngStream(self.seed, mixed)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return `a` as a finite 2-D float64 C-ordered array."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate and return `v` as a finite 1-D float64 array."""
    out = np.ascontiguousarray(v, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit inner-dimension check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def thin_svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin singular value decomposition a = U @ diag(s) @ Vt.

    Returns (U, s, Vt) with s non-negative and descending, U and Vt having
    orthonormal columns/rows, and reconstruction residual at most
    1e-8 * ||a||_F. Raises SvdConvergenceError if the iteration fails.
    """
    a = as_matrix(a, "a")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(f"SVD did not converge for shape {a.shape}: {exc}",
                                  residual=float("inf")) from exc
    norm_a = np.linalg.norm(a)
    residual = np.linalg.norm(a - (u * s) @ vt)
    if norm_a > 0 and residual > 1e-8 * norm_a:
        raise SvdConvergenceError(
            f"SVD reconstruction residual {residual:.3e} exceeds 1e-8 * ||a||_F",
            residual=float(residual))
    return u, s, vt


class LstsqResult(NamedTuple):
    solution: np.ndarray
    rank: int
    singular_values: np.ndarray
    underdetermined: bool


def lstsq(a, b) -> LstsqResult:
    """Minimum-norm least-squares solution of a @ X = b.

    Solves via the thin-SVD pseudoinverse with singular values below
    1e-12 * max(s) treated as zero, which handles rank deficiency
    uniformly. An underdetermined system (fewer rows than columns) is
    flagged on the result rather than rejected.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"lstsq row mismatch: a has {a.shape[0]}, b has {b.shape[0]}")
    u, s, vt = thin_svd(a)
    cutoff = 1e-12 * s[0] if s.size and s[0] > 0 else 0.0
    keep = s > cutoff
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    x = vt.T @ (inv_s[:, None] * (u.T @ b))
    return LstsqResult(solution=x,
                       rank=int(np.count_nonzero(keep)),
                       singular_values=s,
                       underdetermined=a.shape[0] < a.shape[1])


def random_orthogonal(n: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed n x n orthogonal matrix from the given stream."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gen = rng.generator()
    z = gen.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    # Sign fix makes the distribution Haar and the result deterministic.
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d
