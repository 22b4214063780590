"""Small deterministic feed-forward networks.

Everything here is seeded and single-threaded: given the same inputs and the
same seed, ``train``/``finetune`` return bit-identical checkpoints.  Layers
are affine maps followed by elementwise activations (relu, tanh, identity);
the final layer always produces raw logits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, seeded_rng, validate_dataset
from .errors import NumericalError, ValidationError

ACTIVATIONS = ("relu", "tanh", "identity")

DEFAULT_TRAIN_EPOCHS = 200
DEFAULT_FINETUNE_EPOCHS = 10


@dataclass(frozen=True)
class LayerSpec:
    """Shape and activation of one affine layer."""

    in_dim: int
    out_dim: int
    activation: str = "relu"


@dataclass(frozen=True, eq=False)
class LayerWeights:
    """Weight matrix (out_dim x in_dim) and bias vector (out_dim,)."""

    w: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class CheckpointMeta:
    format_version: int = 1
    seed: int = 0
    training_epochs: int = 0
    tag: str = ""


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """An ordered stack of layer weights plus architecture metadata."""

    specs: tuple[LayerSpec, ...]
    layers: tuple[LayerWeights, ...]
    meta: CheckpointMeta = CheckpointMeta()


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = DEFAULT_TRAIN_EPOCHS
    batch_size: int = 16
    learning_rate: float = 0.1
    seed: int = 0
    shuffle: bool = True


def validate_spec_chain(specs) -> tuple[LayerSpec, ...]:
    """Check that layer dimensions chain and the last activation is identity."""
    specs = tuple(specs)
    if not specs:
        raise ValidationError("spec chain is empty")
    for i, spec in enumerate(specs):
        if spec.in_dim < 1 or spec.out_dim < 1:
            raise ValidationError(f"layer {i} has non-positive dimensions: {spec}")
        if spec.activation not in ACTIVATIONS:
            raise ValidationError(
                f"layer {i} has unknown activation {spec.activation!r}; "
                f"expected one of {ACTIVATIONS}"
            )
        if i > 0 and spec.in_dim != specs[i - 1].out_dim:
            raise ValidationError(
                f"layer {i} in_dim {spec.in_dim} does not match "
                f"layer {i - 1} out_dim {specs[i - 1].out_dim}"
            )
    if specs[-1].activation != "identity":
        raise ValidationError("final layer activation must be identity (logits)")
    return specs


def validate_checkpoint(ckpt: Checkpoint) -> Checkpoint:
    validate_spec_chain(ckpt.specs)
    if ckpt.meta.format_version != 1:
        raise ValidationError(
            f"unrecognized checkpoint format_version {ckpt.meta.format_version}"
        )
    if len(ckpt.layers) != len(ckpt.specs):
        raise ValidationError(
            f"checkpoint has {len(ckpt.layers)} weight layers for "
            f"{len(ckpt.specs)} specs"
        )
    for i, (spec, layer) in enumerate(zip(ckpt.specs, ckpt.layers)):
        if layer.w.shape != (spec.out_dim, spec.in_dim):
            raise ValidationError(
                f"layer {i} weight shape {layer.w.shape} does not match spec "
                f"({spec.out_dim}, {spec.in_dim})"
            )
        if layer.b.shape != (spec.out_dim,):
            raise ValidationError(
                f"layer {i} bias shape {layer.b.shape} does not match spec "
                f"({spec.out_dim},)"
            )
        if not (np.isfinite(layer.w).all() and np.isfinite(layer.b).all()):
            raise ValidationError(f"layer {i} contains non-finite values")
    return ckpt


def make_checkpoint(specs, layers, meta: CheckpointMeta = CheckpointMeta()) -> Checkpoint:
    """Build and validate a checkpoint from float64 copies of the inputs."""
    frozen = []
    for layer in layers:
        w = np.array(layer.w, dtype=np.float64)
        b = np.array(layer.b, dtype=np.float64)
        w.setflags(write=False)
        b.setflags(write=False)
        frozen.append(LayerWeights(w, b))
    return validate_checkpoint(Checkpoint(tuple(specs), tuple(frozen), meta))


def checkpoints_equal(a: Checkpoint, b: Checkpoint) -> bool:
    """Bit-exact equality of specs, weights, and metadata."""
    if a.specs != b.specs or a.meta != b.meta:
        return False
    return all(
        np.array_equal(la.w, lb.w) and np.array_equal(la.b, lb.b)
        for la, lb in zip(a.layers, b.layers)
    )


def max_weight_difference(a: Checkpoint, b: Checkpoint) -> float:
    """Largest absolute difference over all weights and biases."""
    if a.specs != b.specs:
        raise ValidationError("checkpoints have different architectures")
    diffs = [
        max(np.abs(la.w - lb.w).max(), np.abs(la.b - lb.b).max())
        for la, lb in zip(a.layers, b.layers)
    ]
    return float(max(diffs))


def init_checkpoint(specs, seed: int, tag: str = "init") -> Checkpoint:
    """Seeded initialization: weights uniform in +-1/sqrt(in_dim), zero biases."""
    specs = validate_spec_chain(specs)
    rng = seeded_rng(seed)
    layers = []
    for spec in specs:
        bound = 1.0 / np.sqrt(spec.in_dim)
        w = rng.uniform(-bound, bound, size=(spec.out_dim, spec.in_dim))
        b = np.zeros(spec.out_dim)
        layers.append(LayerWeights(w, b))
    meta = CheckpointMeta(seed=seed, training_epochs=0, tag=tag)
    return make_checkpoint(specs, layers, meta)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


def forward_batch(ckpt: Checkpoint, x: np.ndarray) -> np.ndarray:
    """Logits for a batch of feature rows (num_samples x in_dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != ckpt.specs[0].in_dim:
        raise ValidationError(
            f"input shape {x.shape} does not match in_dim {ckpt.specs[0].in_dim}"
        )
    a = x
    for spec, layer in zip(ckpt.specs, ckpt.layers):
        a = _activate(a @ layer.w.T + layer.b, spec.activation)
    return a


def forward(ckpt: Checkpoint, x) -> np.ndarray:
    """Logits for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"forward expects a 1-D feature vector, got {x.shape}")
    return forward_batch(ckpt, x[None, :])[0]


def cross_entropy_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy, stabilized with the log-sum-exp trick."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    m = logits.max(axis=1)
    # log softmax denominator, grouped so that uniform logits give ln(C) exactly
    lse = np.log(np.exp(logits - m[:, None]).sum(axis=1))
    picked = logits[np.arange(len(labels)), labels]
    per_sample = lse + (m - picked)
    return float(per_sample.mean())


def accuracy_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    pred = np.argmax(logits, axis=1)
    return float(np.mean(pred == np.asarray(labels)))


def _check_model_data(ckpt: Checkpoint, data: Dataset) -> None:
    validate_dataset(data)
    if data.features.shape[1] != ckpt.specs[0].in_dim:
        raise ValidationError(
            f"dataset feature_dim {data.features.shape[1]} does not match "
            f"model in_dim {ckpt.specs[0].in_dim}"
        )
    if data.num_classes != ckpt.specs[-1].out_dim:
        raise ValidationError(
            f"dataset num_classes {data.num_classes} does not match "
            f"model out_dim {ckpt.specs[-1].out_dim}"
        )


def loss(ckpt: Checkpoint, data: Dataset) -> float:
    """Mean cross-entropy of the model on the dataset."""
    _check_model_data(ckpt, data)
    return cross_entropy_from_logits(forward_batch(ckpt, data.features), data.labels)


def accuracy(ckpt: Checkpoint, data: Dataset) -> float:
    """Fraction of samples whose argmax logit equals the label."""
    _check_model_data(ckpt, data)
    return accuracy_from_logits(forward_batch(ckpt, data.features), data.labels)


def loss_gradients(ckpt: Checkpoint, data: Dataset) -> list[LayerWeights]:
    """Backprop gradients of ``loss`` with respect to every weight and bias.

    Returned as one ``LayerWeights`` of gradients per layer, in layer order.
    """
    _check_model_data(ckpt, data)
    x, labels = data.features, data.labels
    n = x.shape[0]

    pre = []  # pre-activations per layer
    acts = [x]  # post-activations, acts[0] is the input
    a = x
    for spec, layer in zip(ckpt.specs, ckpt.layers):
        z = a @ layer.w.T + layer.b
        pre.append(z)
        a = _activate(z, spec.activation)
        acts.append(a)

    logits = acts[-1]
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    probs = e / e.sum(axis=1, keepdims=True)
    delta = probs
    delta[np.arange(n), labels] -= 1.0
    delta /= n  # gradient of the mean cross-entropy wrt logits

    grads: list[LayerWeights] = [None] * len(ckpt.layers)  # type: ignore[list-item]
    for i in range(len(ckpt.layers) - 1, -1, -1):
        spec, layer = ckpt.specs[i], ckpt.layers[i]
        if spec.activation != "identity":
            delta = delta * _activate_grad(pre[i], spec.activation)
        grads[i] = LayerWeights(delta.T @ acts[i], delta.sum(axis=0))
        if i > 0:
            delta = delta @ layer.w
    return grads


def _sgd_epochs(ckpt: Checkpoint, data: Dataset, cfg: TrainConfig, rng) -> Checkpoint:
    ws = [layer.w.copy() for layer in ckpt.layers]
    bs = [layer.b.copy() for layer in ckpt.layers]
    n = data.features.shape[0]
    if cfg.batch_size < 1:
        raise ValidationError("batch_size must be positive")
    current = ckpt
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.epochs):
            order = rng.permutation(n) if cfg.shuffle else np.arange(n)
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                batch = Dataset(data.features[idx], data.labels[idx], data.num_classes)
                grads = loss_gradients(current, batch)
                for i, g in enumerate(grads):
                    ws[i] -= cfg.learning_rate * g.w
                    bs[i] -= cfg.learning_rate * g.b
                current = Checkpoint(
                    ckpt.specs,
                    tuple(LayerWeights(w, b) for w, b in zip(ws, bs)),
                    ckpt.meta,
                )
    if not all(np.isfinite(w).all() and np.isfinite(b).all() for w, b in zip(ws, bs)):
        raise NumericalError(
            "training diverged to non-finite weights; lower the learning rate"
        )
    return current


def train(specs, data: Dataset, cfg: TrainConfig) -> Checkpoint:
    """Minibatch SGD from a seeded initialization; deterministic in cfg.seed."""
    specs = validate_spec_chain(specs)
    validate_dataset(data)
    if cfg.epochs < 0:
        raise ValidationError("epochs must be >= 0")
    if cfg.learning_rate <= 0:
        raise ValidationError("learning_rate must be positive")
    start = init_checkpoint(specs, cfg.seed, tag="trained")
    _check_model_data(start, data)
    rng = seeded_rng(cfg.seed)
    out = _sgd_epochs(start, data, cfg, rng)
    meta = CheckpointMeta(
        seed=cfg.seed, training_epochs=cfg.epochs, tag=start.meta.tag
    )
    return make_checkpoint(out.specs, out.layers, meta)


def finetune(ckpt: Checkpoint, data: Dataset, cfg: TrainConfig | None = None) -> Checkpoint:
    """Continue SGD from an existing checkpoint; defaults to a short run."""
    validate_checkpoint(ckpt)
    if cfg is None:
        cfg = TrainConfig(epochs=DEFAULT_FINETUNE_EPOCHS)
    if cfg.epochs < 0:
        raise ValidationError("epochs must be >= 0")
    if cfg.learning_rate <= 0:
        raise ValidationError("learning_rate must be positive")
    _check_model_data(ckpt, data)
    if cfg.epochs == 0:
        return ckpt
    rng = seeded_rng(cfg.seed)
    out = _sgd_epochs(ckpt, data, cfg, rng)
    meta = replace(
        ckpt.meta, training_epochs=ckpt.meta.training_epochs + cfg.epochs
    )
    return make_checkpoint(out.specs, out.layers, meta)


def interpolate(ckpt0: Checkpoint, ckpt1: Checkpoint, alpha: float) -> Checkpoint:
    """Affine blend ``(1 - alpha) * ckpt0 + alpha * ckpt1``, layer by layer."""
    validate_checkpoint(ckpt0)
    validate_checkpoint(ckpt1)
    if ckpt0.specs != ckpt1.specs:
        raise ValidationError("interpolate requires identical architectures")
    layers = [
        LayerWeights(
            (1.0 - alpha) * l0.w + alpha * l1.w,
            (1.0 - alpha) * l0.b + alpha * l1.b,
        )
        for l0, l1 in zip(ckpt0.layers, ckpt1.layers)
    ]
    meta = CheckpointMeta(
        seed=ckpt0.meta.seed,
        training_epochs=0,
        tag=f"blend({ckpt0.meta.tag}|{ckpt1.meta.tag},{alpha:g})",
    )
    return make_checkpoint(ckpt0.specs, layers, meta)


def conv_reshape(shape, flat) -> np.ndarray:
    """Flatten a conv kernel [out_ch, in_ch, k_h, k_w] into a 2-D weight.

    The result has one row per output channel; columns run over input
    channel (major), then kernel row, then kernel column, matching the
    row-major order of the flat input.
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) != 4 or any(s < 1 for s in shape):
        raise ValidationError(f"conv shape must be 4 positive ints, got {shape}")
    flat = np.asarray(flat, dtype=np.float64).ravel()
    expected = int(np.prod(shape))
    if flat.size != expected:
        raise ValidationError(
            f"conv data length {flat.size} does not match shape product {expected}"
        )
    out_ch = shape[0]
    return flat.reshape(out_ch, shape[1] * shape[2] * shape[3])
