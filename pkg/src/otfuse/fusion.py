"""Layer-wise transport alignment and weight averaging of two networks.

``align`` walks the layers of model A in order.  For each layer it first
re-expresses A's input weights in B's coordinates using the previous layer's
map, then solves a transport problem between the (aligned) rows of A and
the rows of B, and finally applies the new map to A's output side, bias
included.  ``fuse`` blends the aligned model with B; ``direct_average`` is
the no-alignment baseline; ``fuse_pipeline`` appends the short fine-tuning
stage.

Scaling modes: "normalized" (default) applies the doubly stochastic map
``m * T`` so that aligning a model with itself is the identity and hidden
unit permutations are undone exactly; "literal" keeps the raw coupling and
its 1/m prefactors, which shrinks weights layer by layer and exists for
comparison only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .linalg import matmul, row_distance_matrix, transpose
from .nets import (
    Checkpoint,
    CheckpointMeta,
    LayerWeights,
    TrainConfig,
    finetune,
    interpolate,
    make_checkpoint,
    validate_checkpoint,
)
from .transport import (
    OtSolution,
    TransportMap,
    hard_permutation,
    identity_map,
    ot_objective,
    solve_exact,
    solve_sinkhorn,
)

SOLVERS = ("exact", "sinkhorn")
SCALINGS = ("normalized", "literal")


@dataclass(frozen=True)
class AlignmentOptions:
    """Knobs for the layer-wise alignment.

    ``lam`` is the blend weight used downstream by ``fuse`` (0.5 averages).
    ``fix_last_layer`` pins the output layer's map to the identity so class
    logits keep their meaning.  ``cost_on_aligned_inputs`` computes the row
    distances after input alignment; turning it off compares raw rows.
    ``bias_in_cost`` appends the bias as an extra column when building the
    cost matrix.
    """

    solver: str = "exact"
    sinkhorn_eps: float | None = None  # None -> 0.01 * mean(cost), per layer
    sinkhorn_tol: float = 1e-9
    sinkhorn_max_iter: int = 10000
    cost_on_aligned_inputs: bool = True
    scaling: str = "normalized"
    lam: float = 0.5
    fix_last_layer: bool = True
    bias_in_cost: bool = False


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Aligned copy of model A, one transport map per layer, and the
    per-layer transport objectives."""

    aligned: Checkpoint
    maps: tuple[TransportMap, ...]
    objectives: tuple[float, ...]


def _validate_options(opts: AlignmentOptions) -> None:
    if opts.solver not in SOLVERS:
        raise ValidationError(f"unknown solver {opts.solver!r}; expected one of {SOLVERS}")
    if opts.scaling not in SCALINGS:
        raise ValidationError(f"unknown scaling {opts.scaling!r}; expected one of {SCALINGS}")
    if not 0.0 <= opts.lam <= 1.0:
        raise ValidationError(f"lam must lie in [0, 1], got {opts.lam}")


def _check_same_architecture(a: Checkpoint, b: Checkpoint, op: str) -> None:
    validate_checkpoint(a)
    validate_checkpoint(b)
    if a.specs != b.specs:
        raise ValidationError(f"{op} requires identical layer specs: {a.specs} vs {b.specs}")


def _solve_layer(cost: np.ndarray, opts: AlignmentOptions) -> OtSolution:
    if opts.solver == "exact":
        return solve_exact(cost)
    return solve_sinkhorn(
        cost,
        eps=opts.sinkhorn_eps,
        tol=opts.sinkhorn_tol,
        max_iter=opts.sinkhorn_max_iter,
    )


def _carrier(tm: TransportMap, scaling: str) -> np.ndarray:
    """Matrix actually multiplied into the weights for this map."""
    if scaling == "literal":
        return tm.matrix
    hard = hard_permutation(tm)
    return hard if hard is not None else tm.side * tm.matrix


def align(model_a: Checkpoint, model_b: Checkpoint, opts: AlignmentOptions = AlignmentOptions()) -> AlignmentResult:
    """Align model A's units onto model B's, layer by layer.

    Model B is kept fixed; the returned checkpoint is A expressed in B's
    unit ordering, suitable for elementwise averaging with B.
    """
    _validate_options(opts)
    _check_same_architecture(model_a, model_b, "align")

    num_layers = len(model_a.specs)
    prev_carrier: np.ndarray | None = None  # layer 0 input coordinates are shared
    prev_side = 0
    aligned_layers: list[LayerWeights] = []
    maps: list[TransportMap] = []
    objectives: list[float] = []

    for l in range(num_layers):
        spec = model_a.specs[l]
        wa, ba = model_a.layers[l].w, model_a.layers[l].b
        wb, bb = model_b.layers[l].w, model_b.layers[l].b

        if prev_carrier is None:
            w_hat = wa
        elif opts.scaling == "literal":
            w_hat = matmul(wa, prev_carrier) / prev_side
        else:
            w_hat = matmul(wa, prev_carrier)

        cost_rows_a = w_hat if opts.cost_on_aligned_inputs else wa
        if opts.bias_in_cost:
            cost_a = np.hstack([cost_rows_a, ba[:, None]])
            cost_b = np.hstack([wb, bb[:, None]])
        else:
            cost_a, cost_b = cost_rows_a, wb
        cost = row_distance_matrix(cost_a, cost_b)

        if opts.fix_last_layer and l == num_layers - 1:
            tm = identity_map(spec.out_dim)
            objectives.append(ot_objective(tm, cost))
        else:
            solution = _solve_layer(cost, opts)
            tm = solution.map
            objectives.append(solution.objective)
        maps.append(tm)

        carrier = _carrier(tm, opts.scaling)
        if opts.scaling == "literal":
            w_tilde = matmul(transpose(carrier), w_hat) / spec.out_dim
            b_tilde = (carrier.T @ ba) / spec.out_dim
        else:
            w_tilde = matmul(transpose(carrier), w_hat)
            b_tilde = carrier.T @ ba
        aligned_layers.append(LayerWeights(w_tilde, b_tilde))
        prev_carrier = carrier
        prev_side = spec.out_dim

    meta = CheckpointMeta(
        seed=model_a.meta.seed,
        training_epochs=model_a.meta.training_epochs,
        tag="aligned",
    )
    aligned = make_checkpoint(model_a.specs, aligned_layers, meta)
    return AlignmentResult(aligned, tuple(maps), tuple(objectives))


def _blend(a: Checkpoint, b: Checkpoint, lam: float, tag: str) -> Checkpoint:
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lam must lie in [0, 1], got {lam}")
    blended = interpolate(a, b, lam)
    meta = CheckpointMeta(seed=b.meta.seed, training_epochs=0, tag=tag)
    return make_checkpoint(blended.specs, blended.layers, meta)


def fuse(aligned_a: Checkpoint, model_b: Checkpoint, lam: float = 0.5) -> Checkpoint:
    """Per-layer blend ``(1 - lam) * aligned_a + lam * model_b``."""
    _check_same_architecture(aligned_a, model_b, "fuse")
    return _blend(aligned_a, model_b, lam, "fused")


def direct_average(model_a: Checkpoint, model_b: Checkpoint, lam: float = 0.5) -> Checkpoint:
    """Elementwise parameter average with no alignment; the failing baseline."""
    _check_same_architecture(model_a, model_b, "direct_average")
    return _blend(model_a, model_b, lam, "direct-average")


def fuse_pipeline(
    model_a: Checkpoint,
    model_b: Checkpoint,
    opts: AlignmentOptions,
    finetune_data: Dataset,
    cfg: TrainConfig | None = None,
) -> Checkpoint:
    """Align, fuse, then moderately fine-tune the blended model."""
    result = align(model_a, model_b, opts)
    fused = fuse(result.aligned, model_b, opts.lam)
    if cfg is None:
        cfg = TrainConfig(epochs=10)
    if cfg.epochs == 0:
        return fused
    return finetune(fused, finetune_data, cfg)
