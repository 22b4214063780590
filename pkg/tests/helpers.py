"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from otfuse.nets import (
    Checkpoint,
    CheckpointMeta,
    LayerSpec,
    LayerWeights,
    make_checkpoint,
)


def random_specs(rng, max_layers: int = 3, max_units: int = 8, in_dim: int | None = None,
                 activation: str = "tanh") -> tuple[LayerSpec, ...]:
    depth = int(rng.integers(1, max_layers + 1))
    dims = [in_dim or int(rng.integers(1, max_units + 1))]
    dims += [int(rng.integers(1, max_units + 1)) for _ in range(depth)]
    specs = [
        LayerSpec(dims[i], dims[i + 1], activation) for i in range(depth - 1)
    ]
    specs.append(LayerSpec(dims[-2], dims[-1], "identity"))
    return tuple(specs)


def random_checkpoint(rng, specs=None, scale: float = 1.0, **spec_kwargs) -> Checkpoint:
    if specs is None:
        specs = random_specs(rng, **spec_kwargs)
    layers = [
        LayerWeights(
            scale * rng.standard_normal((s.out_dim, s.in_dim)),
            scale * rng.standard_normal(s.out_dim),
        )
        for s in specs
    ]
    meta = CheckpointMeta(seed=int(rng.integers(0, 2**31)), tag="random")
    return make_checkpoint(specs, layers, meta)


def permutation_matrix(perm: np.ndarray) -> np.ndarray:
    """P with P[i, perm[i]] = 1, so (P @ W)[i] = W[perm[i]]."""
    m = len(perm)
    p = np.zeros((m, m))
    p[np.arange(m), perm] = 1.0
    return p


def permuted_twin(ckpt: Checkpoint, perms: list[np.ndarray]) -> Checkpoint:
    """Permute each hidden layer's output units; function is preserved.

    ``perms`` holds one permutation per hidden layer (all layers except the
    last).  Layer l's rows and bias are reordered by P_l and layer l+1's
    columns by P_l^T.
    """
    assert len(perms) == len(ckpt.layers) - 1
    ws = [l.w.copy() for l in ckpt.layers]
    bs = [l.b.copy() for l in ckpt.layers]
    for l, perm in enumerate(perms):
        p = permutation_matrix(perm)
        ws[l] = p @ ws[l]
        bs[l] = p @ bs[l]
        ws[l + 1] = ws[l + 1] @ p.T
    layers = [LayerWeights(w, b) for w, b in zip(ws, bs)]
    return make_checkpoint(ckpt.specs, layers, ckpt.meta)
