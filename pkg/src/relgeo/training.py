"""From-scratch training of MLP autoencoders and instance-discrimination heads.

Backpropagation, Adam, and both losses (reconstruction MSE and the
instance-discrimination cross-entropy) are written out explicitly so the
whole training path is auditable and deterministic: batch order,
initialization, and shuffling all flow from named RngStream splits, and
single-threaded reduction order makes repeated runs bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import ACTIVATIONS, Layer, MlpDecoder, MlpModel, mlp_from_dict, mlp_to_dict
from .numerics import RngStream, as_matrix

__all__ = [
    "TrainConfig",
    "TrainingDivergedError",
    "BackpropResult",
    "AdamState",
    "init_mlp",
    "backprop_step",
    "train_autoencoder",
    "DietHead",
    "diet_loss_and_grads",
    "train_diet",
    "diet_to_dict",
    "diet_from_dict",
]


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch where it happened."""

    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    seed: RngStream
    learning_rate: float = 1e-3
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    loss: str = "mse"  # "mse" | "diet_ce"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        b1, b2 = self.adam_betas
        if not (0 < b1 < 1 and 0 < b2 < 1):
            raise ValueError("adam betas must lie strictly in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss not in ("mse", "diet_ce"):
            raise ValueError(f"unknown loss {self.loss!r}")


def init_mlp(layer_dims: list[int], activations: list[str], rng: RngStream) -> MlpModel:
    """Glorot-uniform weights, zero biases; one activation per layer."""
    if len(layer_dims) < 2 or len(activations) != len(layer_dims) - 1:
        raise ValueError("need n>=2 dims and n-1 activations")
    gen = rng.generator()
    layers = []
    for fan_in, fan_out, act in zip(layer_dims, layer_dims[1:], activations):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weight = gen.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append(Layer(weight=weight, bias=np.zeros(fan_out), activation=act))
    return MlpModel(layers)


class AdamState:
    """Adam moment buffers for a flat list of parameter arrays."""

    def __init__(self, shapes: list[tuple[int, ...]], learning_rate: float,
                 betas: tuple[float, float], eps: float):
        self.lr = learning_rate
        self.b1, self.b2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """In-place Adam update; a zero gradient leaves parameters unchanged."""
        self.step_count += 1
        c1 = 1.0 - self.b1 ** self.step_count
        c2 = 1.0 - self.b2 ** self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _backward(model: MlpModel, cache, d_out: np.ndarray):
    """Reverse-mode sweep given dLoss/dOutput; returns grads and dLoss/dInput."""
    weight_grads = [None] * len(model.layers)
    bias_grads = [None] * len(model.layers)
    grad = d_out
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        inp, pre, post = cache[idx]
        _, dact = ACTIVATIONS[layer.activation]
        d_pre = grad * dact(pre, post)
        weight_grads[idx] = inp.T @ d_pre
        bias_grads[idx] = d_pre.sum(axis=0)
        grad = d_pre @ layer.weight.T
    return weight_grads, bias_grads, grad


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class BackpropResult:
    loss: float
    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]


def backprop_step(model: MlpModel, X, targets, loss: str = "mse") -> BackpropResult:
    """One loss/gradient evaluation on a batch, without updating parameters.

    For "mse" the loss is the batch mean of the per-sample squared error
    summed over output dimensions; targets is a matrix of the same shape as
    the model output. For "diet_ce" the model output is treated as logits
    and targets is an integer label vector; the loss is the batch-mean
    softmax cross-entropy.
    """
    X = as_matrix(X, "X")
    out, cache = model.forward_cached(X)
    batch = X.shape[0]
    if loss == "mse":
        targets = as_matrix(targets, "targets")
        if targets.shape != out.shape:
            raise ValueError(f"target shape {targets.shape} != output {out.shape}")
        diff = out - targets
        loss_value = float(np.sum(diff * diff) / batch)
        d_out = 2.0 * diff / batch
    elif loss == "diet_ce":
        labels = np.asarray(targets, dtype=np.int64)
        if labels.shape != (batch,):
            raise ValueError("diet_ce targets must be a label vector, one per row")
        probs = _softmax(out)
        picked = probs[np.arange(batch), labels]
        loss_value = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
        d_out = probs
        d_out[np.arange(batch), labels] -= 1.0
        d_out /= batch
    else:
        raise ValueError(f"unknown loss {loss!r}")
    weight_grads, bias_grads, _ = _backward(model, cache, d_out)
    return BackpropResult(loss_value, weight_grads, bias_grads)


def _minibatches(n: int, batch_size: int, order: np.ndarray):
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_autoencoder(data, enc_spec: list[tuple[int, str]],
                      dec_spec: list[tuple[int, str]], cfg: TrainConfig
                      ) -> tuple[MlpModel, MlpModel, np.ndarray]:
    """Train encoder/decoder MLPs jointly on reconstruction.

    enc_spec and dec_spec list (width, activation) pairs; the encoder input
    width is the data dimension and the decoder must end back at it.
    Returns (encoder, decoder, per-epoch mean loss history).
    """
    data = as_matrix(data, "data")
    n, data_dim = data.shape
    if n < cfg.batch_size:
        raise ValueError("data must have at least batch_size rows")
    dims = [data_dim] + [w for w, _ in enc_spec] + [w for w, _ in dec_spec]
    acts = [a for _, a in enc_spec] + [a for _, a in dec_spec]
    if dims[-1] != data_dim:
        raise ValueError("decoder spec must end at the data dimension")
    model = init_mlp(dims, acts, cfg.seed.split("init:autoencoder"))
    n_enc = len(enc_spec)

    params = [arr for layer in model.layers for arr in (layer.weight, layer.bias)]
    adam = AdamState([p.shape for p in params], cfg.learning_rate, cfg.adam_betas,
                     cfg.adam_eps)
    history = np.zeros(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = cfg.seed.split(f"shuffle:epoch-{epoch}").generator().permutation(n)
        total = 0.0
        for batch_idx in _minibatches(n, cfg.batch_size, order):
            batch = data[batch_idx]
            result = backprop_step(model, batch, batch, loss="mse")
            if not np.isfinite(result.loss):
                raise TrainingDivergedError(epoch)
            grads = [arr for w, b in zip(result.weight_grads, result.bias_grads)
                     for arr in (w, b)]
            adam.step(params, grads)
            total += result.loss * batch.shape[0]
        history[epoch] = total / n

    encoder = MlpModel(model.layers[:n_enc])
    decoder = MlpModel(model.layers[n_enc:])
    return encoder, decoder, history


@dataclass
class DietHead:
    """Instance-discrimination head: nonlinear map f then bias-free projection W.

    W has one row per instance and no bias term; the penultimate
    representation f(x) is where the (approximately spherical) geometry
    lives, with the logits W @ f(x) used only for the training objective.
    """

    f: MlpModel
    W: np.ndarray  # (num_instances, penultimate_dim)
    num_instances: int
    train_accuracy: float | None = None
    loss_history: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.W = as_matrix(self.W, "W")
        if self.W.shape != (self.num_instances, self.f.output_dim):
            raise ValueError("W must be (num_instances, penultimate_dim)")

    def penultimate_batch(self, Z) -> np.ndarray:
        return self.f.forward_batch(Z)

    def logits_batch(self, Z) -> np.ndarray:
        return self.f.forward_batch(Z) @ self.W.T

    def penultimate_decoder(self) -> MlpDecoder:
        """Decoder onto the penultimate layer (spherical-metric pullback target)."""
        return MlpDecoder(self.f)

    def logits_decoder(self) -> MlpDecoder:
        """Decoder onto the logit space (Euclidean or Fisher-Rao pullback target)."""
        proj = Layer(weight=self.W.T.copy(), bias=np.zeros(self.num_instances),
                     activation="identity")
        return MlpDecoder(MlpModel(self.f.layers + [proj]))


def diet_loss_and_grads(head: DietHead, X, labels):
    """Instance-discrimination cross-entropy and its gradients.

    Returns (loss, f_weight_grads, f_bias_grads, W_grad) for the batch-mean
    of -log softmax(W @ f(x))[label].
    """
    X = as_matrix(X, "X")
    labels = np.asarray(labels, dtype=np.int64)
    batch = X.shape[0]
    penult, cache = head.f.forward_cached(X)
    logits = penult @ head.W.T
    probs = _softmax(logits)
    picked = probs[np.arange(batch), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    d_logits = probs
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch
    w_grad = d_logits.T @ penult
    d_penult = d_logits @ head.W
    f_weight_grads, f_bias_grads, _ = _backward(head.f, cache, d_penult)
    return loss, f_weight_grads, f_bias_grads, w_grad


def train_diet(embeddings, instance_labels, head_spec: list[tuple[int, str]],
               cfg: TrainConfig, num_instances: int | None = None) -> DietHead:
    """Fit an instance-discrimination head on fixed embeddings.

    head_spec lists (width, activation) pairs for the nonlinear map f; the
    bias-free projection onto num_instances logits is appended internally.
    Every instance label must occur at least once (the softmax normalizes
    over all instances). The returned head carries its loss history and
    final training accuracy.
    """
    Z = as_matrix(embeddings, "embeddings")
    labels = np.asarray(instance_labels, dtype=np.int64)
    if labels.shape != (Z.shape[0],):
        raise ValueError("need one instance label per embedding row")
    if num_instances is None:
        num_instances = int(labels.max()) + 1 if labels.size else 0
    if labels.size and (labels.min() < 0 or labels.max() >= num_instances):
        raise ValueError("labels must lie in [0, num_instances)")
    used = np.bincount(labels, minlength=num_instances)
    if np.any(used == 0):
        missing = int(np.argmin(used))
        raise ValueError(f"instance label {missing} is never used; "
                         "softmax over all instances requires full coverage")

    dims = [Z.shape[1]] + [w for w, _ in head_spec]
    acts = [a for _, a in head_spec]
    f = init_mlp(dims, acts, cfg.seed.split("init:diet-f"))
    gen_w = cfg.seed.split("init:diet-W").generator()
    bound = np.sqrt(6.0 / (f.output_dim + num_instances))
    W = gen_w.uniform(-bound, bound, size=(num_instances, f.output_dim))
    head = DietHead(f=f, W=W, num_instances=num_instances)

    params = [arr for layer in f.layers for arr in (layer.weight, layer.bias)]
    params.append(head.W)
    adam = AdamState([p.shape for p in params], cfg.learning_rate, cfg.adam_betas,
                     cfg.adam_eps)
    n = Z.shape[0]
    history = np.zeros(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = cfg.seed.split(f"shuffle:epoch-{epoch}").generator().permutation(n)
        total = 0.0
        for batch_idx in _minibatches(n, cfg.batch_size, order):
            loss, f_w, f_b, w_grad = diet_loss_and_grads(head, Z[batch_idx],
                                                         labels[batch_idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            grads = [arr for w, b in zip(f_w, f_b) for arr in (w, b)]
            grads.append(w_grad)
            adam.step(params, grads)
            total += loss * len(batch_idx)
        history[epoch] = total / n

    predictions = np.argmax(head.logits_batch(Z), axis=1)
    head.train_accuracy = float(np.mean(predictions == labels)) if n else 0.0
    head.loss_history = history
    return head


DIET_FORMAT_VERSION = 1


def diet_to_dict(head: DietHead) -> dict:
    return {
        "format_version": DIET_FORMAT_VERSION,
        "f": mlp_to_dict(head.f),
        "W": {
            "rows": head.W.shape[0],
            "cols": head.W.shape[1],
            "data": head.W.ravel(order="C").tolist(),
        },
        "num_instances": head.num_instances,
        "train_accuracy": head.train_accuracy,
    }


def diet_from_dict(doc: dict) -> DietHead:
    if doc.get("format_version") != DIET_FORMAT_VERSION:
        raise ValueError(f"unsupported diet format_version {doc.get('format_version')!r}")
    w_spec = doc["W"]
    W = np.asarray(w_spec["data"], dtype=np.float64).reshape(
        int(w_spec["rows"]), int(w_spec["cols"]))
    return DietHead(f=mlp_from_dict(doc["f"]), W=W,
                    num_instances=int(doc["num_instances"]),
                    train_accuracy=doc.get("train_accuracy"))
