"""Measurement machinery: edit-distance error rates, hypothesis selection,
logit ensembling, and loss-landscape interpolation.

Edit counts are canonicalized: among all minimal-cost alignments the one
with the fewest non-diagonal moves is reported, which fixes the
substitution / deletion / insertion split and makes scoring symmetric
(swapping reference and hypothesis swaps deletions with insertions).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import Dataset, validate_dataset
from .errors import DataFormatError, ValidationError
from .nets import (
    Checkpoint,
    accuracy_from_logits,
    cross_entropy_from_logits,
    forward_batch,
    interpolate,
    loss,
    validate_checkpoint,
)


@dataclass(frozen=True)
class EditCounts:
    subs: int
    dels: int
    ins: int

    @property
    def total(self) -> int:
        return self.subs + self.dels + self.ins


@dataclass(frozen=True)
class Hypothesis:
    """One system's token sequence for one utterance."""

    utt_id: str
    tokens: tuple[str, ...]
    confidences: tuple[float, ...] | None = None


@dataclass(frozen=True)
class HypothesisSet:
    system_name: str
    items: Mapping[str, Hypothesis]


@dataclass(frozen=True)
class OracleSelection:
    selection: dict[str, str]  # utt_id -> system_name
    wer: float


@dataclass(frozen=True)
class EnsembleMetrics:
    loss: float
    accuracy: float


@dataclass(frozen=True, eq=False)
class LandscapeCurve:
    alphas: np.ndarray
    losses: np.ndarray


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> EditCounts:
    """Minimal substitutions + deletions + insertions turning ref into hyp."""
    n, m = len(ref), len(hyp)
    # DP over (cost, non-diagonal moves), minimized lexicographically
    cost = np.zeros((n + 1, m + 1), dtype=np.int64)
    skew = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[:, 0] = np.arange(n + 1)
    skew[:, 0] = np.arange(n + 1)
    cost[0, :] = np.arange(m + 1)
    skew[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = (cost[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]), skew[i - 1, j - 1])
            for cand in (
                (cost[i - 1, j] + 1, skew[i - 1, j] + 1),  # deletion
                (cost[i, j - 1] + 1, skew[i, j - 1] + 1),  # insertion
            ):
                if cand < best:
                    best = cand
            cost[i, j], skew[i, j] = best
    total = int(cost[n, m])
    nondiag = int(skew[n, m])
    diff = n - m  # deletions minus insertions is fixed by the lengths
    dels = (nondiag + diff) // 2
    ins = (nondiag - diff) // 2
    return EditCounts(subs=total - nondiag, dels=dels, ins=ins)


def _check_coverage(sets: Iterable[HypothesisSet], refs: Mapping[str, Sequence[str]]) -> None:
    ref_ids = set(refs)
    for hs in sets:
        missing = ref_ids - set(hs.items)
        extra = set(hs.items) - ref_ids
        if missing:
            raise ValidationError(
                f"system {hs.system_name!r} lacks hypotheses for {sorted(missing)[:5]}"
            )
        if extra:
            raise ValidationError(
                f"system {hs.system_name!r} has hypotheses without references: "
                f"{sorted(extra)[:5]}"
            )


def error_rate(refs: Mapping[str, Sequence[str]], hyps: HypothesisSet) -> float:
    """Sum of edit totals over the sum of reference lengths (may exceed 1)."""
    _check_coverage([hyps], refs)
    ref_len = sum(len(tokens) for tokens in refs.values())
    if ref_len == 0:
        raise ValidationError("total reference length is zero")
    total = sum(
        edit_distance(refs[utt], hyps.items[utt].tokens).total for utt in refs
    )
    return total / ref_len


def oracle_select(sets: Sequence[HypothesisSet], refs: Mapping[str, Sequence[str]]) -> OracleSelection:
    """Per utterance, pick the system with the fewest edits against the
    reference (ties go to the earliest system)."""
    if not sets:
        raise ValidationError("need at least one hypothesis set")
    _check_coverage(sets, refs)
    ref_len = sum(len(tokens) for tokens in refs.values())
    if ref_len == 0:
        raise ValidationError("total reference length is zero")
    selection: dict[str, str] = {}
    total = 0
    for utt in refs:
        best_name, best_edits = None, None
        for hs in sets:
            edits = edit_distance(refs[utt], hs.items[utt].tokens).total
            if best_edits is None or edits < best_edits:
                best_name, best_edits = hs.system_name, edits
        selection[utt] = best_name
        total += best_edits
    return OracleSelection(selection, total / ref_len)


def mean_confidence(hyp: Hypothesis) -> float:
    """Average token confidence; an empty hypothesis scores 0."""
    if hyp.confidences is None:
        raise ValidationError(f"hypothesis {hyp.utt_id!r} carries no confidences")
    if len(hyp.confidences) != len(hyp.tokens):
        raise ValidationError(
            f"hypothesis {hyp.utt_id!r} has {len(hyp.confidences)} confidences "
            f"for {len(hyp.tokens)} tokens"
        )
    if not hyp.confidences:
        return 0.0
    return float(np.mean(hyp.confidences))


def confidence_select(sets: Sequence[HypothesisSet]) -> dict[str, str]:
    """Per utterance, pick the system with the highest mean confidence."""
    if not sets:
        raise ValidationError("need at least one hypothesis set")
    utt_ids = set(sets[0].items)
    for hs in sets[1:]:
        if set(hs.items) != utt_ids:
            raise ValidationError("hypothesis sets cover different utterances")
    selection: dict[str, str] = {}
    for utt in sets[0].items:
        best_name, best_conf = None, None
        for hs in sets:
            conf = mean_confidence(hs.items[utt])
            if best_conf is None or conf > best_conf:
                best_name, best_conf = hs.system_name, conf
        selection[utt] = best_name
    return selection


def selected_set(sets: Sequence[HypothesisSet], selection: Mapping[str, str], name: str = "selected") -> HypothesisSet:
    """Assemble the per-utterance winners into a new hypothesis set."""
    by_name = {hs.system_name: hs for hs in sets}
    items = {utt: by_name[sys].items[utt] for utt, sys in selection.items()}
    return HypothesisSet(name, items)


def ensemble_logits(models: Sequence[Checkpoint], data: Dataset) -> EnsembleMetrics:
    """Classify by the unweighted mean of the models' output logits."""
    if not models:
        raise ValidationError("need at least one model")
    in_dims = {m.specs[0].in_dim for m in models}
    out_dims = {m.specs[-1].out_dim for m in models}
    if len(in_dims) != 1 or len(out_dims) != 1:
        raise ValidationError(
            f"models disagree on feature/class dims: in {in_dims}, out {out_dims}"
        )
    for m in models:
        validate_checkpoint(m)
    validate_dataset(data)
    if data.num_classes != next(iter(out_dims)):
        raise ValidationError(
            f"dataset num_classes {data.num_classes} does not match model "
            f"out_dim {next(iter(out_dims))}"
        )
    stacked = np.stack([forward_batch(m, data.features) for m in models])
    mean_logits = stacked.mean(axis=0)
    return EnsembleMetrics(
        loss=cross_entropy_from_logits(mean_logits, data.labels),
        accuracy=accuracy_from_logits(mean_logits, data.labels),
    )


def landscape(theta0: Checkpoint, theta: Checkpoint, data: Dataset, num_points: int = 21) -> LandscapeCurve:
    """Loss along the straight line between two checkpoints.

    The grid is uniform over [0, 1] and always contains both endpoints, so
    the first and last losses equal direct evaluations of the inputs.
    """
    if num_points < 2:
        raise ValidationError("num_points must be >= 2")
    if theta0.specs != theta.specs:
        raise ValidationError("landscape endpoints have different architectures")
    alphas = np.linspace(0.0, 1.0, num_points)
    losses = np.array(
        [loss(interpolate(theta0, theta, float(a)), data) for a in alphas]
    )
    return LandscapeCurve(alphas, losses)


# --- file formats ---------------------------------------------------------


def _split_tokens(field: str) -> tuple[str, ...]:
    return tuple(field.split(" ")) if field else ()


def read_references(path) -> dict[str, tuple[str, ...]]:
    """Lines of ``utt_id<TAB>token token token``."""
    refs: dict[str, tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'utt_id<TAB>tokens', got {len(parts)} fields"
                )
            utt, tokens = parts
            if utt in refs:
                raise DataFormatError(f"{path}:{lineno}: duplicate utt_id {utt!r}")
            refs[utt] = _split_tokens(tokens)
    if not refs:
        raise DataFormatError(f"{path}: no references")
    return refs


def read_hypotheses(path, system_name: str) -> HypothesisSet:
    """Lines of ``utt_id<TAB>tokens[<TAB>c1 c2 c3]`` with optional confidences."""
    items: dict[str, Hypothesis] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise DataFormatError(
                    f"{path}:{lineno}: expected 2 or 3 tab-separated fields, got {len(parts)}"
                )
            utt = parts[0]
            if utt in items:
                raise DataFormatError(f"{path}:{lineno}: duplicate utt_id {utt!r}")
            tokens = _split_tokens(parts[1])
            confidences = None
            if len(parts) == 3:
                try:
                    confidences = tuple(float(c) for c in parts[2].split(" ") if c)
                except ValueError as exc:
                    raise DataFormatError(f"{path}:{lineno}: bad confidence ({exc})") from exc
                if len(confidences) != len(tokens):
                    raise DataFormatError(
                        f"{path}:{lineno}: {len(confidences)} confidences for "
                        f"{len(tokens)} tokens"
                    )
                if any(not 0.0 <= c <= 1.0 for c in confidences):
                    raise DataFormatError(f"{path}:{lineno}: confidence outside [0, 1]")
            items[utt] = Hypothesis(utt, tokens, confidences)
    if not items:
        raise DataFormatError(f"{path}: no hypotheses")
    return HypothesisSet(system_name, items)


def word_tokens(text: str) -> tuple[str, ...]:
    """Split on single spaces; no normalization."""
    return _split_tokens(text)


def char_tokens(text: str) -> tuple[str, ...]:
    """Each non-space character is one token."""
    return tuple(ch for ch in text if ch != " ")


def write_landscape_csv(curve: LandscapeCurve, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha,loss\n")
        for a, l in zip(curve.alphas, curve.losses):
            fh.write(f"{a:.6g},{l:.6g}\n")
