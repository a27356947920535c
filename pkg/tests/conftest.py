"""Shared test fixtures and independent oracles.

The oracles here (triple-loop matmul, finite-difference Jacobians, sort-based
ranking) are deliberately naive re-implementations kept separate from the
library code paths they validate.
"""

import numpy as np
import pytest

from relgeo.numerics import RngStream
from relgeo.training import init_mlp


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0.0
            for k in range(a.shape[1]):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def fd_jacobian(fn, z, h=1e-5):
    """Central-difference Jacobian of a vector function at z."""
    z = np.asarray(z, dtype=np.float64)
    out0 = fn(z)
    J = np.zeros((out0.shape[0], z.shape[0]))
    for i in range(z.shape[0]):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        J[:, i] = (fn(zp) - fn(zm)) / (2.0 * h)
    return J


def fd_vjp(fn, z, u, h=1e-5):
    return fd_jacobian(fn, z, h=h).T @ np.asarray(u, dtype=np.float64)


def relative_error(actual, expected):
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = max(1e-12, float(np.linalg.norm(expected)))
    return float(np.linalg.norm(actual - expected)) / scale


def mrr_sort_oracle(D, gt, higher_is_better=True):
    """Per-row rank via explicit sorting with the smallest-index tie rule."""
    recip = []
    ranks = []
    for i in range(D.shape[0]):
        row = D[i]
        keyed = sorted(range(D.shape[1]),
                       key=lambda j: (-row[j] if higher_is_better else row[j], j))
        rank = keyed.index(gt[i]) + 1
        ranks.append(rank)
        recip.append(1.0 / rank)
    return float(np.mean(recip)), np.array(ranks)


def rank_oracle(v):
    """O(n^2) fractional ranks with tie averaging."""
    n = len(v)
    ranks = np.zeros(n)
    for i in range(n):
        less = sum(1 for j in range(n) if v[j] < v[i])
        equal = sum(1 for j in range(n) if v[j] == v[i])
        ranks[i] = less + (equal + 1) / 2.0
    return ranks


@pytest.fixture
def rng():
    return RngStream(20240817)


@pytest.fixture
def small_mlp_decoder():
    """Random smooth 2 -> 5 decoder for geometry tests."""
    from relgeo.models import MlpDecoder

    model = init_mlp([2, 16, 5], ["tanh", "identity"], RngStream(7, 11))
    return MlpDecoder(model)
