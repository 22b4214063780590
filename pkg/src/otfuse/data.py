"""Labeled datasets and the synthetic two-domain classification task.

The synthetic task emulates the in-domain vs. broad-data asymmetry that the
fusion experiments need: every domain shares the same class structure, but
each non-canonical domain's class means are shifted by a fixed amount in a
random direction.  Sampling uses one independent, seeded stream per domain,
so generating domain 0 alone yields exactly the domain-0 rows of a joint
generation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ValidationError

_SEED_SPACE = 2**64


def seeded_rng(*keys: int) -> np.random.Generator:
    """Generator keyed by one or more 64-bit integers (negatives wrap)."""
    return np.random.default_rng([int(k) % _SEED_SPACE for k in keys])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature rows with integer class labels in ``[0, num_classes)``."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int


def validate_dataset(ds: Dataset) -> Dataset:
    if ds.features.ndim != 2:
        raise ValidationError(f"features must be 2-D, got {ds.features.shape}")
    if ds.features.shape[0] == 0:
        raise ValidationError("dataset is empty")
    if not np.isfinite(ds.features).all():
        raise ValidationError("features contain non-finite values")
    if ds.labels.shape != (ds.features.shape[0],):
        raise ValidationError(
            f"labels shape {ds.labels.shape} does not match "
            f"{ds.features.shape[0]} samples"
        )
    if ds.num_classes < 1:
        raise ValidationError("num_classes must be positive")
    if ds.labels.min() < 0 or ds.labels.max() >= ds.num_classes:
        raise ValidationError(
            f"labels must lie in [0, {ds.num_classes}), "
            f"got range [{ds.labels.min()}, {ds.labels.max()}]"
        )
    return ds


def make_dataset(features, labels, num_classes: int) -> Dataset:
    ds = Dataset(
        np.ascontiguousarray(features, dtype=np.float64),
        np.ascontiguousarray(labels, dtype=np.int64),
        int(num_classes),
    )
    return validate_dataset(ds)


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    return (
        a.num_classes == b.num_classes
        and np.array_equal(a.features, b.features)
        and np.array_equal(a.labels, b.labels)
    )


def concat_datasets(*parts: Dataset) -> Dataset:
    """Stack datasets with identical feature dims and class counts."""
    if not parts:
        raise ValidationError("concat_datasets needs at least one dataset")
    dims = {p.features.shape[1] for p in parts}
    classes = {p.num_classes for p in parts}
    if len(dims) != 1 or len(classes) != 1:
        raise ValidationError("datasets disagree on feature_dim or num_classes")
    return make_dataset(
        np.vstack([p.features for p in parts]),
        np.concatenate([p.labels for p in parts]),
        parts[0].num_classes,
    )


@dataclass(frozen=True)
class DomainMixtureConfig:
    """Gaussian-mixture task with one shifted copy of the classes per domain.

    ``domains`` selects which domains to emit; domain 0 is unshifted and
    domain k >= 1 moves every class mean by ``domain_shift`` along a random
    unit direction drawn per (domain, class).
    """

    num_classes: int = 3
    feature_dim: int = 8
    domains: tuple[int, ...] = (0, 1)
    train_per_class: int = 50
    heldout_per_class: int = 25
    domain_shift: float = 2.0
    noise_scale: float = 0.6
    mean_scale: float = 2.5


def _class_means(cfg: DomainMixtureConfig, seed: int) -> np.ndarray:
    rng = seeded_rng(seed, 101)
    return cfg.mean_scale * rng.standard_normal((cfg.num_classes, cfg.feature_dim))


def _domain_offsets(cfg: DomainMixtureConfig, seed: int, domain: int) -> np.ndarray:
    if domain == 0 or cfg.domain_shift == 0.0:
        return np.zeros((cfg.num_classes, cfg.feature_dim))
    rng = seeded_rng(seed, 211, domain)
    dirs = rng.standard_normal((cfg.num_classes, cfg.feature_dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return cfg.domain_shift * dirs


def gen_synthetic(cfg: DomainMixtureConfig, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic (train, heldout) pair for the configured domains."""
    if cfg.num_classes < 2:
        raise ValidationError("need at least 2 classes")
    if not cfg.domains:
        raise ValidationError("need at least 1 domain")
    if any(d < 0 for d in cfg.domains):
        raise ValidationError("domain indices must be non-negative")
    if cfg.noise_scale <= 0:
        raise ValidationError("noise_scale must be positive")
    if cfg.feature_dim < 1 or cfg.train_per_class < 1 or cfg.heldout_per_class < 1:
        raise ValidationError("feature_dim and per-class counts must be positive")

    means = _class_means(cfg, seed)
    train_x, train_y, held_x, held_y = [], [], [], []
    for domain in cfg.domains:
        centers = means + _domain_offsets(cfg, seed, domain)
        for split, per_class, xs, ys in (
            ("train", cfg.train_per_class, train_x, train_y),
            ("heldout", cfg.heldout_per_class, held_x, held_y),
        ):
            rng = seeded_rng(seed, 307, domain, 0 if split == "train" else 1)
            for c in range(cfg.num_classes):
                pts = centers[c] + cfg.noise_scale * rng.standard_normal(
                    (per_class, cfg.feature_dim)
                )
                xs.append(pts)
                ys.append(np.full(per_class, c, dtype=np.int64))

    train = make_dataset(np.vstack(train_x), np.concatenate(train_y), cfg.num_classes)
    heldout = make_dataset(np.vstack(held_x), np.concatenate(held_y), cfg.num_classes)
    return train, heldout


def nearest_centroid_accuracy(train: Dataset, test: Dataset) -> float:
    """Accuracy of classifying by the nearest training-class centroid."""
    centroids = np.stack(
        [train.features[train.labels == c].mean(axis=0) for c in range(train.num_classes)]
    )
    d = np.linalg.norm(test.features[:, None, :] - centroids[None, :, :], axis=2)
    return float(np.mean(np.argmin(d, axis=1) == test.labels))


def save_dataset_csv(ds: Dataset, path) -> None:
    """Write ``f0,...,f{d-1},label`` rows under the standard header."""
    validate_dataset(ds)
    dim = ds.features.shape[1]
    header = ",".join(f"f{i}" for i in range(dim)) + ",label"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row, label in zip(ds.features, ds.labels):
            cells = [repr(float(v)) for v in row]
            fh.write(",".join(cells) + f",{int(label)}\n")


def load_dataset_csv(path) -> Dataset:
    """Read a dataset file; num_classes is inferred as max(label) + 1."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines:
        raise DataFormatError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if header[-1] != "label" or any(not h.startswith("f") for h in header[:-1]):
        raise DataFormatError(f"{path}: bad header {lines[0]!r}")
    dim = len(header) - 1
    feats, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != dim + 1:
            raise DataFormatError(
                f"{path}:{lineno}: expected {dim + 1} columns, got {len(cells)}"
            )
        try:
            feats.append([float(c) for c in cells[:-1]])
            labels.append(int(cells[-1]))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    if not feats:
        raise DataFormatError(f"{path}: no samples")
    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.min() < 0:
        raise DataFormatError(f"{path}: negative label")
    return make_dataset(np.asarray(feats), labels_arr, int(labels_arr.max()) + 1)
