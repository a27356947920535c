"""Feed-forward models, analytic test decoders, and decoder composition.

A decoder maps latent vectors to output-space vectors and exposes, besides
the forward pass, a vector-Jacobian product so curve energies can be
optimized through it. Analytic decoders (linear map, sphere chart, swiss
roll) carry closed-form Jacobians; MLPs use reverse-mode accumulation.

Single-vector operations follow the y = A @ z + b column convention;
batched operations act on rows of a samples x dim matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .numerics import as_matrix, as_vector

__all__ = [
    "ACTIVATIONS",
    "Layer",
    "MlpModel",
    "Decoder",
    "MlpDecoder",
    "LinearDecoder",
    "SphereChartDecoder",
    "SwissRollDecoder",
    "SoftmaxDecoder",
    "ComposedDecoder",
    "LatentMap",
    "AffineMap",
    "TanhResidualMap",
    "InvertedLatentMap",
    "OutputIsometry",
    "compose",
    "mlp_to_dict",
    "mlp_from_dict",
    "save_mlp",
    "load_mlp",
    "decoder_to_dict",
    "decoder_from_dict",
    "latent_map_to_dict",
    "latent_map_from_dict",
]

MODEL_FORMAT_VERSION = 1


def _act_identity(x):
    return x


def _act_relu(x):
    return np.maximum(x, 0.0)


def _act_tanh(x):
    return np.tanh(x)


def _act_sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _dact_identity(pre, post):
    return np.ones_like(pre)


def _dact_relu(pre, post):
    # Subgradient at 0 is fixed to 0 for determinism.
    return (pre > 0.0).astype(np.float64)


def _dact_tanh(pre, post):
    return 1.0 - post * post


def _dact_sigmoid(pre, post):
    return post * (1.0 - post)


ACTIVATIONS = {
    "identity": (_act_identity, _dact_identity),
    "relu": (_act_relu, _dact_relu),
    "tanh": (_act_tanh, _dact_tanh),
    "sigmoid": (_act_sigmoid, _dact_sigmoid),
}


@dataclass
class Layer:
    """One affine-plus-activation layer: act(z @ weight + bias)."""

    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weight = as_matrix(self.weight, "weight")
        self.bias = as_vector(self.bias, "bias")
        if self.bias.shape[0] != self.weight.shape[1]:
            raise ValueError("bias length must equal weight fan_out")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class MlpModel:
    """Plain feed-forward stack of Layer objects with chained dimensions."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("MlpModel needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[1] != nxt.weight.shape[0]:
                raise ValueError("consecutive layer dimensions do not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    def forward(self, z) -> np.ndarray:
        z = as_vector(z, "z")
        return self.forward_batch(z[None, :])[0]

    def forward_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        if Z.shape[1] != self.input_dim:
            raise ValueError(f"input dim {Z.shape[1]} != model input {self.input_dim}")
        out = Z
        for layer in self.layers:
            act, _ = ACTIVATIONS[layer.activation]
            out = act(out @ layer.weight + layer.bias)
        return out

    def forward_cached(self, Z: np.ndarray):
        """Forward pass keeping per-layer (pre, post) activations for backprop."""
        cache = []
        out = Z
        for layer in self.layers:
            act, _ = ACTIVATIONS[layer.activation]
            pre = out @ layer.weight + layer.bias
            post = act(pre)
            cache.append((out, pre, post))
            out = post
        return out, cache

    def vjp_batch(self, Z, U) -> np.ndarray:
        """Rows of J(z_i)^T u_i for paired rows of Z and U."""
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        if U.shape[1] != self.output_dim:
            raise ValueError(f"cotangent dim {U.shape[1]} != output {self.output_dim}")
        _, cache = self.forward_cached(Z)
        grad = U
        for layer, (_, pre, post) in zip(reversed(self.layers), reversed(cache)):
            _, dact = ACTIVATIONS[layer.activation]
            dpre = grad * dact(pre, post)
            grad = dpre @ layer.weight.T
        return grad

    def vjp(self, z, u) -> np.ndarray:
        z = as_vector(z, "z")
        u = as_vector(u, "u")
        return self.vjp_batch(z[None, :], u[None, :])[0]


class Decoder:
    """Interface: a deterministic map from latent space to output space."""

    input_dim: int
    output_dim: int

    def forward(self, z) -> np.ndarray:
        z = as_vector(z, "z")
        return self.forward_batch(z[None, :])[0]

    def forward_batch(self, Z) -> np.ndarray:
        raise NotImplementedError

    def vjp(self, z, u) -> np.ndarray:
        z = as_vector(z, "z")
        u = as_vector(u, "u")
        return self.vjp_batch(z[None, :], u[None, :])[0]

    def vjp_batch(self, Z, U) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, Z: np.ndarray):
        if Z.shape[1] != self.input_dim:
            raise ValueError(f"latent dim {Z.shape[1]} != decoder input {self.input_dim}")

    def _check_cotangent(self, U: np.ndarray):
        if U.shape[1] != self.output_dim:
            raise ValueError(f"cotangent dim {U.shape[1]} != decoder output {self.output_dim}")


class MlpDecoder(Decoder):
    """Decoder backed by an MlpModel."""

    def __init__(self, model: MlpModel):
        self.model = model
        self.input_dim = model.input_dim
        self.output_dim = model.output_dim

    def forward_batch(self, Z) -> np.ndarray:
        return self.model.forward_batch(Z)

    def vjp_batch(self, Z, U) -> np.ndarray:
        return self.model.vjp_batch(Z, U)


class LinearDecoder(Decoder):
    """y = A @ z + offset, with exact Jacobian A."""

    def __init__(self, A, offset=None):
        self.A = as_matrix(A, "A")
        self.output_dim, self.input_dim = self.A.shape
        if offset is None:
            offset = np.zeros(self.output_dim)
        self.offset = as_vector(offset, "offset")
        if self.offset.shape[0] != self.output_dim:
            raise ValueError("offset length must equal output dim")

    def forward_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        self._check_input(Z)
        return Z @ self.A.T + self.offset

    def vjp_batch(self, Z, U) -> np.ndarray:
        U = as_matrix(U, "U")
        self._check_cotangent(U)
        return U @ self.A


class SphereChartDecoder(Decoder):
    """Chart (theta, phi) -> r * (sin t cos p, sin t sin p, cos t) on the sphere."""

    input_dim = 2
    output_dim = 3

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def forward_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        self._check_input(Z)
        theta, phi = Z[:, 0], Z[:, 1]
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        return self.radius * np.stack([st * cp, st * sp, ct], axis=1)

    def vjp_batch(self, Z, U) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        self._check_input(Z)
        self._check_cotangent(U)
        theta, phi = Z[:, 0], Z[:, 1]
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        r = self.radius
        # Columns of J are d/dtheta and d/dphi of the embedding.
        d_theta = r * (U[:, 0] * ct * cp + U[:, 1] * ct * sp - U[:, 2] * st)
        d_phi = r * (-U[:, 0] * st * sp + U[:, 1] * st * cp)
        return np.stack([d_theta, d_phi], axis=1)


class SwissRollDecoder(Decoder):
    """Chart (t, h) -> scale * (t cos t, h, t sin t)."""

    input_dim = 2
    output_dim = 3

    def __init__(self, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)

    def forward_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        self._check_input(Z)
        t, h = Z[:, 0], Z[:, 1]
        return self.scale * np.stack([t * np.cos(t), h, t * np.sin(t)], axis=1)

    def vjp_batch(self, Z, U) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        self._check_input(Z)
        self._check_cotangent(U)
        t = Z[:, 0]
        ct, st = np.cos(t), np.sin(t)
        d_t = self.scale * (U[:, 0] * (ct - t * st) + U[:, 2] * (st + t * ct))
        d_h = self.scale * U[:, 1]
        return np.stack([d_t, d_h], axis=1)


class SoftmaxDecoder(Decoder):
    """Row-wise softmax on top of another decoder's outputs.

    Turns a logits head into a map onto the probability simplex, the input
    the Fisher-Rao metric expects. The softmax Jacobian diag(s) - s s^T is
    symmetric, so the chained vjp is cheap.
    """

    def __init__(self, inner: Decoder):
        self.inner = inner
        self.input_dim = inner.input_dim
        self.output_dim = inner.output_dim

    @staticmethod
    def _softmax_rows(L: np.ndarray) -> np.ndarray:
        shifted = L - L.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def forward_batch(self, Z) -> np.ndarray:
        return self._softmax_rows(self.inner.forward_batch(Z))

    def vjp_batch(self, Z, U) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        self._check_cotangent(U)
        S = self._softmax_rows(self.inner.forward_batch(Z))
        inner_cotangent = S * U - S * (S * U).sum(axis=1, keepdims=True)
        return self.inner.vjp_batch(Z, inner_cotangent)


class LatentMap:
    """Interface: a smooth bijection of latent space onto itself."""

    dim: int

    def apply(self, z) -> np.ndarray:
        z = as_vector(z, "z")
        return self.apply_batch(z[None, :])[0]

    def apply_batch(self, Z) -> np.ndarray:
        raise NotImplementedError

    def inverse_apply(self, y) -> np.ndarray:
        y = as_vector(y, "y")
        return self.inverse_apply_batch(y[None, :])[0]

    def inverse_apply_batch(self, Y) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, z) -> np.ndarray:
        raise NotImplementedError

    def vjp_batch(self, Z, U) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        out = np.empty_like(U)
        for i in range(Z.shape[0]):
            out[i] = self.jacobian(Z[i]).T @ U[i]
        return out

    def inverse(self) -> "LatentMap":
        return InvertedLatentMap(self)


class AffineMap(LatentMap):
    """z -> A @ z + b with A certified invertible at construction."""

    def __init__(self, A, b=None):
        self.A = as_matrix(A, "A")
        if self.A.shape[0] != self.A.shape[1]:
            raise ValueError("affine latent map requires a square matrix")
        self.dim = self.A.shape[0]
        if b is None:
            b = np.zeros(self.dim)
        self.b = as_vector(b, "b")
        if self.b.shape[0] != self.dim:
            raise ValueError("translation length must equal dim")
        if abs(np.linalg.det(self.A)) <= 1e-12:
            raise ValueError("affine map matrix is numerically singular")
        self._A_inv = np.linalg.inv(self.A)

    def apply_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        return Z @ self.A.T + self.b

    def inverse_apply_batch(self, Y) -> np.ndarray:
        Y = as_matrix(Y, "Y")
        return (Y - self.b) @ self._A_inv.T

    def jacobian(self, z) -> np.ndarray:
        return self.A

    def vjp_batch(self, Z, U) -> np.ndarray:
        U = as_matrix(U, "U")
        return U @ self.A

    def inverse(self) -> "AffineMap":
        return AffineMap(self._A_inv, -self._A_inv @ self.b)


def _spectral_norm(W: np.ndarray, iters: int = 50) -> float:
    """Largest singular value estimated by power iteration on W^T W."""
    v = np.full(W.shape[1], 1.0 / np.sqrt(W.shape[1]))
    for _ in range(iters):
        w = W @ v
        v = W.T @ w
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return 0.0
        v /= norm
    return float(np.linalg.norm(W @ v))


class TanhResidualMap(LatentMap):
    """Smooth bijection z -> z + alpha * tanh(W @ z + b).

    The residual is a certified contraction (alpha * ||W||_2 < 0.9 enforced
    at construction via power iteration), so the map is a diffeomorphism and
    its inverse is computable by fixed-point iteration.
    """

    def __init__(self, W, b=None, alpha: float = 0.5,
                 max_fixed_point_iters: int = 200, fixed_point_tol: float = 1e-10):
        self.W = as_matrix(W, "W")
        if self.W.shape[0] != self.W.shape[1]:
            raise ValueError("residual map requires a square matrix")
        self.dim = self.W.shape[0]
        if b is None:
            b = np.zeros(self.dim)
        self.b = as_vector(b, "b")
        self.alpha = float(alpha)
        self.max_fixed_point_iters = max_fixed_point_iters
        self.fixed_point_tol = fixed_point_tol
        lipschitz = abs(self.alpha) * _spectral_norm(self.W)
        if lipschitz >= 0.9:
            raise ValueError(
                f"residual Lipschitz bound {lipschitz:.3f} >= 0.9; map not certified invertible")
        self.lipschitz = lipschitz

    def apply_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        return Z + self.alpha * np.tanh(Z @ self.W.T + self.b)

    def inverse_apply_batch(self, Y) -> np.ndarray:
        Y = as_matrix(Y, "Y")
        Z = Y.copy()
        for _ in range(self.max_fixed_point_iters):
            Z_next = Y - self.alpha * np.tanh(Z @ self.W.T + self.b)
            step = float(np.max(np.abs(Z_next - Z)))
            Z = Z_next
            if step < self.fixed_point_tol:
                return Z
        raise RuntimeError(
            f"fixed-point inversion did not reach tol {self.fixed_point_tol:g} "
            f"in {self.max_fixed_point_iters} iterations (last step {step:.3e})")

    def jacobian(self, z) -> np.ndarray:
        z = as_vector(z, "z")
        t = np.tanh(self.W @ z + self.b)
        return np.eye(self.dim) + self.alpha * ((1.0 - t * t)[:, None] * self.W)

    def vjp_batch(self, Z, U) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        t = np.tanh(Z @ self.W.T + self.b)
        return U + self.alpha * (((1.0 - t * t) * U) @ self.W)


class InvertedLatentMap(LatentMap):
    """The inverse of another LatentMap, realized through its inversion routine."""

    def __init__(self, inner: LatentMap):
        self.inner = inner
        self.dim = inner.dim

    def apply_batch(self, Z) -> np.ndarray:
        return self.inner.inverse_apply_batch(Z)

    def inverse_apply_batch(self, Y) -> np.ndarray:
        return self.inner.apply_batch(Y)

    def jacobian(self, z) -> np.ndarray:
        z = as_vector(z, "z")
        pre_image = self.inner.inverse_apply(z)
        return np.linalg.inv(self.inner.jacobian(pre_image))

    def inverse(self) -> LatentMap:
        return self.inner


@dataclass
class OutputIsometry:
    """Rigid motion y -> Q @ y + t of the output space."""

    Q: np.ndarray
    t: np.ndarray = None

    def __post_init__(self):
        self.Q = as_matrix(self.Q, "Q")
        n = self.Q.shape[0]
        if self.Q.shape[1] != n:
            raise ValueError("Q must be square")
        if self.t is None:
            self.t = np.zeros(n)
        self.t = as_vector(self.t, "t")
        if self.t.shape[0] != n:
            raise ValueError("translation length must equal Q dim")
        if np.max(np.abs(self.Q.T @ self.Q - np.eye(n))) > 1e-10:
            raise ValueError("Q is not orthogonal within 1e-10")

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def apply_batch(self, Y) -> np.ndarray:
        Y = as_matrix(Y, "Y")
        return Y @ self.Q.T + self.t

    def apply(self, y) -> np.ndarray:
        y = as_vector(y, "y")
        return self.Q @ y + self.t


class ComposedDecoder(Decoder):
    """post-isometry o inner-decoder o pre-latent-map, with chained vjp."""

    def __init__(self, inner: Decoder, pre: LatentMap | None = None,
                 post: OutputIsometry | None = None):
        if pre is not None and pre.dim != inner.input_dim:
            raise ValueError("pre-map dim does not match inner decoder input")
        if post is not None and post.dim != inner.output_dim:
            raise ValueError("post-isometry dim does not match inner decoder output")
        self.inner = inner
        self.pre = pre
        self.post = post
        self.input_dim = inner.input_dim
        self.output_dim = inner.output_dim

    def forward_batch(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        self._check_input(Z)
        mid = self.pre.apply_batch(Z) if self.pre is not None else Z
        out = self.inner.forward_batch(mid)
        if self.post is not None:
            out = self.post.apply_batch(out)
        return out

    def vjp_batch(self, Z, U) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        U = as_matrix(U, "U")
        self._check_input(Z)
        self._check_cotangent(U)
        mid = self.pre.apply_batch(Z) if self.pre is not None else Z
        grad = U @ self.post.Q if self.post is not None else U
        grad = self.inner.vjp_batch(mid, grad)
        if self.pre is not None:
            grad = self.pre.vjp_batch(Z, grad)
        return grad


def compose(inner: Decoder, pre: LatentMap | None = None,
            post: OutputIsometry | None = None) -> Decoder:
    """Wrap a decoder with an optional latent reparametrization and output isometry."""
    if pre is None and post is None:
        return inner
    return ComposedDecoder(inner, pre=pre, post=post)


def _matrix_to_dict(m: np.ndarray) -> dict:
    return {"rows": m.shape[0], "cols": m.shape[1],
            "data": m.ravel(order="C").tolist()}


def _matrix_from_dict(doc: dict) -> np.ndarray:
    data = np.asarray(doc["data"], dtype=np.float64)
    return data.reshape(int(doc["rows"]), int(doc["cols"]))


def latent_map_to_dict(lmap: LatentMap) -> dict:
    if isinstance(lmap, AffineMap):
        return {"kind": "affine", "A": _matrix_to_dict(lmap.A), "b": lmap.b.tolist()}
    if isinstance(lmap, TanhResidualMap):
        return {"kind": "tanh_residual", "W": _matrix_to_dict(lmap.W),
                "b": lmap.b.tolist(), "alpha": lmap.alpha}
    if isinstance(lmap, InvertedLatentMap):
        return {"kind": "inverted", "inner": latent_map_to_dict(lmap.inner)}
    raise ValueError(f"cannot serialize latent map {type(lmap).__name__}")


def latent_map_from_dict(doc: dict) -> LatentMap:
    kind = doc["kind"]
    if kind == "affine":
        return AffineMap(_matrix_from_dict(doc["A"]),
                         np.asarray(doc["b"], dtype=np.float64))
    if kind == "tanh_residual":
        return TanhResidualMap(_matrix_from_dict(doc["W"]),
                               np.asarray(doc["b"], dtype=np.float64),
                               alpha=float(doc["alpha"]))
    if kind == "inverted":
        return InvertedLatentMap(latent_map_from_dict(doc["inner"]))
    raise ValueError(f"unknown latent map kind {kind!r}")


def decoder_to_dict(dec: Decoder) -> dict:
    """JSON-compatible document for any built-in decoder variant."""
    if isinstance(dec, MlpDecoder):
        return {"kind": "mlp", "model": mlp_to_dict(dec.model)}
    if isinstance(dec, LinearDecoder):
        return {"kind": "linear", "A": _matrix_to_dict(dec.A),
                "offset": dec.offset.tolist()}
    if isinstance(dec, SphereChartDecoder):
        return {"kind": "sphere_chart", "radius": dec.radius}
    if isinstance(dec, SwissRollDecoder):
        return {"kind": "swiss_roll", "scale": dec.scale}
    if isinstance(dec, SoftmaxDecoder):
        return {"kind": "softmax", "inner": decoder_to_dict(dec.inner)}
    if isinstance(dec, ComposedDecoder):
        return {
            "kind": "composed",
            "inner": decoder_to_dict(dec.inner),
            "pre": latent_map_to_dict(dec.pre) if dec.pre is not None else None,
            "post": {"Q": _matrix_to_dict(dec.post.Q), "t": dec.post.t.tolist()}
            if dec.post is not None else None,
        }
    raise ValueError(f"cannot serialize decoder {type(dec).__name__}")


def decoder_from_dict(doc: dict) -> Decoder:
    kind = doc["kind"]
    if kind == "mlp":
        return MlpDecoder(mlp_from_dict(doc["model"]))
    if kind == "linear":
        return LinearDecoder(_matrix_from_dict(doc["A"]),
                             np.asarray(doc["offset"], dtype=np.float64))
    if kind == "sphere_chart":
        return SphereChartDecoder(radius=float(doc["radius"]))
    if kind == "swiss_roll":
        return SwissRollDecoder(scale=float(doc["scale"]))
    if kind == "softmax":
        return SoftmaxDecoder(decoder_from_dict(doc["inner"]))
    if kind == "composed":
        pre = latent_map_from_dict(doc["pre"]) if doc["pre"] is not None else None
        post = None
        if doc["post"] is not None:
            post = OutputIsometry(_matrix_from_dict(doc["post"]["Q"]),
                                  np.asarray(doc["post"]["t"], dtype=np.float64))
        return ComposedDecoder(decoder_from_dict(doc["inner"]), pre=pre, post=post)
    raise ValueError(f"unknown decoder kind {kind!r}")


def mlp_to_dict(model: MlpModel) -> dict:
    """JSON-compatible document for an MlpModel, lossless for float64."""
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "layers": [
            {
                "rows": layer.weight.shape[0],
                "cols": layer.weight.shape[1],
                "weights": layer.weight.ravel(order="C").tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
    }


def mlp_from_dict(doc: dict) -> MlpModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')!r}")
    layers = []
    for spec in doc["layers"]:
        rows, cols = int(spec["rows"]), int(spec["cols"])
        weights = np.asarray(spec["weights"], dtype=np.float64)
        if weights.size != rows * cols:
            raise ValueError("weight payload length does not match declared dims")
        layers.append(Layer(weight=weights.reshape(rows, cols),
                            bias=np.asarray(spec["bias"], dtype=np.float64),
                            activation=spec["activation"]))
    return MlpModel(layers)


def save_mlp(model: MlpModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mlp_to_dict(model), fh)


def load_mlp(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        return mlp_from_dict(json.load(fh))
