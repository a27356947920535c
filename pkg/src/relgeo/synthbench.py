"""Synthetic ground truth: same-manifold decoder pairs and toy datasets.

A manifold pair consists of a base decoder and a second decoder built as
(isometry) o (base) o (reparametrization)^-1, so both parametrize the same
output manifold and the exact correspondence between their latent spaces is
known by construction. Every invariance claim in the package is testable
against such pairs without any training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (AffineMap, Decoder, LatentMap, OutputIsometry,
                     TanhResidualMap, compose, decoder_from_dict,
                     decoder_to_dict, latent_map_from_dict, latent_map_to_dict)
from .numerics import RngStream, as_matrix, random_orthogonal
from .training import init_mlp

__all__ = [
    "ManifoldPair",
    "SyntheticDataset",
    "make_manifold_pair",
    "make_dataset",
    "save_manifold_pair",
    "load_manifold_pair",
]


@dataclass
class ManifoldPair:
    """Two decoders of one manifold plus the exact latent correspondence.

    The defining identity, checked at construction on probe points:
        decoder2(encoder_map(z)) == isometry(decoder1(z))
    In particular decoder2's latent samples are encoder_map(latent_samples).
    """

    decoder1: Decoder
    decoder2: Decoder
    encoder_map: LatentMap
    isometry: OutputIsometry
    latent_samples: np.ndarray
    descriptor: str

    @property
    def latent_samples2(self) -> np.ndarray:
        return self.encoder_map.apply_batch(self.latent_samples)


def _random_affine(dim: int, rng: RngStream) -> AffineMap:
    """Well-conditioned random invertible affine map (singular values in [0.5, 2])."""
    q1 = random_orthogonal(dim, rng.split("affine-q1"))
    q2 = random_orthogonal(dim, rng.split("affine-q2"))
    singulars = rng.split("affine-s").generator().uniform(0.5, 2.0, size=dim)
    b = rng.split("affine-b").generator().normal(0.0, 0.5, size=dim)
    return AffineMap(q1 @ np.diag(singulars) @ q2, b)


def _random_tanh_residual(dim: int, rng: RngStream, contraction: float = 0.5
                          ) -> TanhResidualMap:
    gen = rng.generator()
    W = gen.standard_normal((dim, dim))
    spectral = np.linalg.norm(W, ord=2)
    if spectral == 0.0:
        raise ValueError("degenerate random residual matrix")
    W *= 1.0 / spectral  # alpha * ||W||_2 == contraction below
    b = gen.normal(0.0, 0.3, size=dim)
    return TanhResidualMap(W, b, alpha=contraction)


def make_manifold_pair(base: Decoder, latent_map_kind: str, rng: RngStream,
                       n_samples: int = 500, probe_points: int = 32) -> ManifoldPair:
    """Build a second parametrization of base's manifold with known ground truth.

    latent_map_kind selects the reparametrization: "affine" (exact inverse),
    "smooth" (certified tanh-residual contraction, inverted by fixed-point
    iteration), or "identity". The output isometry is a random rotation plus
    translation except for the identity kind. The defining identity is
    verified on probe points at construction (1e-10 affine/identity, 1e-8
    smooth, the latter limited by the fixed-point inversion tolerance).
    """
    dim = base.input_dim
    if latent_map_kind == "affine":
        phi: LatentMap = _random_affine(dim, rng.split("latent-map"))
        tol = 1e-10
    elif latent_map_kind == "smooth":
        phi = _random_tanh_residual(dim, rng.split("latent-map"))
        tol = 1e-8
    elif latent_map_kind == "identity":
        phi = AffineMap(np.eye(dim))
        tol = 1e-12
    else:
        raise ValueError(f"unknown latent map kind {latent_map_kind!r}")

    if latent_map_kind == "identity":
        isometry = OutputIsometry(np.eye(base.output_dim), np.zeros(base.output_dim))
    else:
        q = random_orthogonal(base.output_dim, rng.split("isometry-q"))
        t = rng.split("isometry-t").generator().normal(0.0, 1.0, size=base.output_dim)
        isometry = OutputIsometry(q, t)

    decoder2 = compose(base, pre=phi.inverse(), post=isometry)

    probes = rng.split("probes").generator().standard_normal((probe_points, dim))
    lhs = decoder2.forward_batch(phi.apply_batch(probes))
    rhs = isometry.apply_batch(base.forward_batch(probes))
    gap = float(np.max(np.abs(lhs - rhs))) if probe_points else 0.0
    if gap > tol:
        raise RuntimeError(
            f"manifold pair construction failed its defining identity: gap {gap:.3e} > {tol:g}")

    samples = rng.split("samples").generator().standard_normal((n_samples, dim))
    return ManifoldPair(decoder1=base, decoder2=decoder2, encoder_map=phi,
                        isometry=isometry, latent_samples=samples,
                        descriptor=f"{latent_map_kind} reparametrization of "
                                   f"{type(base).__name__} (dim {dim})")


def save_manifold_pair(pair: ManifoldPair, directory) -> None:
    """Persist a pair as pair.json (structure) plus samples.rgem (latents)."""
    import json
    from pathlib import Path

    from .io_formats import write_embedding

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {
        "decoder1": decoder_to_dict(pair.decoder1),
        "decoder2": decoder_to_dict(pair.decoder2),
        "encoder_map": latent_map_to_dict(pair.encoder_map),
        "isometry": {"Q": {"rows": pair.isometry.Q.shape[0],
                           "cols": pair.isometry.Q.shape[1],
                           "data": pair.isometry.Q.ravel(order="C").tolist()},
                     "t": pair.isometry.t.tolist()},
        "descriptor": pair.descriptor,
    }
    (directory / "pair.json").write_text(json.dumps(doc), encoding="utf-8")
    write_embedding(directory / "samples.rgem", pair.latent_samples)


def load_manifold_pair(directory) -> ManifoldPair:
    import json
    from pathlib import Path

    from .io_formats import read_embedding

    directory = Path(directory)
    doc = json.loads((directory / "pair.json").read_text(encoding="utf-8"))
    iso_doc = doc["isometry"]
    Q = np.asarray(iso_doc["Q"]["data"], dtype=np.float64).reshape(
        int(iso_doc["Q"]["rows"]), int(iso_doc["Q"]["cols"]))
    return ManifoldPair(
        decoder1=decoder_from_dict(doc["decoder1"]),
        decoder2=decoder_from_dict(doc["decoder2"]),
        encoder_map=latent_map_from_dict(doc["encoder_map"]),
        isometry=OutputIsometry(Q, np.asarray(iso_doc["t"], dtype=np.float64)),
        latent_samples=read_embedding(directory / "samples.rgem"),
        descriptor=doc["descriptor"],
    )


@dataclass
class SyntheticDataset:
    """Ambient data with its generating latent coordinates and instance labels."""

    X: np.ndarray
    Z: np.ndarray
    labels: np.ndarray
    noise_sigma: float

    def __post_init__(self):
        self.X = as_matrix(self.X, "X")
        self.Z = as_matrix(self.Z, "Z")
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if not (self.X.shape[0] == self.Z.shape[0] == self.labels.shape[0]):
            raise ValueError("X, Z and labels must agree on the number of rows")


_MIXTURE_STD = 0.35
_MIXTURE_SEPARATION = 6.0  # min center gap in units of _MIXTURE_STD


def _spread_centers(candidates: np.ndarray, k: int) -> np.ndarray:
    """Greedy max-min pick of k rows, then rescale to guarantee separation."""
    chosen = [0]
    min_dist = np.linalg.norm(candidates - candidates[0], axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist,
                              np.linalg.norm(candidates - candidates[nxt], axis=1))
    centers = candidates[chosen]
    gaps = np.linalg.norm(centers[:, None] - centers[None, :], axis=2)
    gaps[np.diag_indices(k)] = np.inf
    target = _MIXTURE_SEPARATION * _MIXTURE_STD
    smallest = gaps.min()
    if k > 1 and smallest < target:
        centers = centers * (target / smallest)
    return centers


def _mixture_latent(n: int, latent_dim: int, n_components: int,
                    gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # Clusters are separable by construction so they can serve as
    # instance-discrimination labels.
    candidates = gen.normal(0.0, 2.0, size=(max(50 * n_components, 100), latent_dim))
    centers = _spread_centers(candidates, n_components)
    # Balanced deterministic assignment keeps label histograms seed-independent.
    labels = np.arange(n, dtype=np.int64) % n_components
    Z = centers[labels] + gen.normal(0.0, _MIXTURE_STD, size=(n, latent_dim))
    return Z, labels


def _swiss_roll_latent(n: int, gen: np.random.Generator,
                       n_components: int) -> tuple[np.ndarray, np.ndarray]:
    t = gen.uniform(1.5 * np.pi, 4.5 * np.pi, size=n)
    h = gen.uniform(0.0, 10.0, size=n)
    labels = np.minimum((n_components * (t - 1.5 * np.pi) / (3.0 * np.pi)).astype(np.int64),
                        n_components - 1)
    return np.stack([t, h], axis=1), labels


def _sphere_patch_latent(n: int, gen: np.random.Generator,
                         n_components: int) -> tuple[np.ndarray, np.ndarray]:
    theta = gen.uniform(0.25 * np.pi, 0.75 * np.pi, size=n)
    phi = gen.uniform(0.0, 1.5 * np.pi, size=n)
    labels = np.minimum((n_components * phi / (1.5 * np.pi)).astype(np.int64),
                        n_components - 1)
    return np.stack([theta, phi], axis=1), labels


def make_dataset(kind: str, n: int, ambient_dim: int, noise: float,
                 rng: RngStream, latent_dim: int = 2,
                 n_components: int = 10) -> SyntheticDataset:
    """Sample latent coordinates and push them through a frozen random embedding.

    Kinds: "gaussian_mixture" (n_components clusters in latent_dim
    dimensions, balanced labels), "swiss_roll" and "sphere_patch" (2-D
    charts; labels are equal-width bins along the winding coordinate).
    The ambient map is a seeded 1-hidden-layer tanh MLP; Gaussian noise of
    the given sigma is added on top.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind in ("swiss_roll", "sphere_patch") and latent_dim != 2:
        raise ValueError(f"{kind} requires latent_dim == 2")
    if ambient_dim < latent_dim:
        raise ValueError("ambient_dim must be >= latent_dim")

    gen = rng.split("latent").generator()
    if kind == "gaussian_mixture":
        Z, labels = _mixture_latent(n, latent_dim, n_components, gen)
    elif kind == "swiss_roll":
        Z, labels = _swiss_roll_latent(n, gen, n_components)
    elif kind == "sphere_patch":
        Z, labels = _sphere_patch_latent(n, gen, n_components)
    else:
        raise ValueError(f"unknown dataset kind {kind!r}")

    embed = init_mlp([latent_dim, 64, ambient_dim], ["tanh", "identity"],
                     rng.split("embed"))
    X = embed.forward_batch(Z)
    if noise > 0.0:
        X = X + rng.split("noise").generator().normal(0.0, noise, size=X.shape)
    return SyntheticDataset(X=X, Z=Z, labels=labels, noise_sigma=float(noise))
