"""Checkpoint serialization.

A checkpoint file is a single JSON document::

    {"format_version": 1,
     "meta": {"seed": ..., "training_epochs": ..., "tag": ...},
     "specs": [{"in_dim": ..., "out_dim": ..., "activation": ...}, ...],
     "layers": [{"w": "<base64>", "b": "<base64>"}, ...]}

Weight payloads are base64-encoded little-endian float64 values in row-major
order, so ``load(save(x))`` reproduces ``x`` bit-exactly.
"""

from __future__ import annotations

import base64
import binascii
import json

import numpy as np

from .errors import CheckpointFormatError, CheckpointVersionError
from .nets import Checkpoint, CheckpointMeta, LayerSpec, LayerWeights, make_checkpoint

FORMAT_VERSION = 1


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str, count: int, what: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text, validate=True)
    except (binascii.Error, TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"{what}: invalid base64 payload") from exc
    if len(raw) != 8 * count:
        raise CheckpointFormatError(
            f"{what}: payload holds {len(raw) // 8} values, expected {count}"
        )
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def checkpoint_to_dict(ckpt: Checkpoint) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "meta": {
            "seed": int(ckpt.meta.seed),
            "training_epochs": int(ckpt.meta.training_epochs),
            "tag": ckpt.meta.tag,
        },
        "specs": [
            {"in_dim": s.in_dim, "out_dim": s.out_dim, "activation": s.activation}
            for s in ckpt.specs
        ],
        "layers": [{"w": _encode(l.w), "b": _encode(l.b)} for l in ckpt.layers],
    }


def checkpoint_from_dict(doc: dict) -> Checkpoint:
    if not isinstance(doc, dict):
        raise CheckpointFormatError("checkpoint document is not an object")
    version = doc.get("format_version")
    if not isinstance(version, int):
        raise CheckpointFormatError("missing or non-integer format_version")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint format_version {version}; "
            f"this build reads version {FORMAT_VERSION}"
        )
    try:
        meta_doc = doc["meta"]
        specs_doc = doc["specs"]
        layers_doc = doc["layers"]
    except KeyError as exc:
        raise CheckpointFormatError(f"missing checkpoint field {exc}") from exc
    if len(specs_doc) != len(layers_doc):
        raise CheckpointFormatError(
            f"{len(specs_doc)} specs but {len(layers_doc)} weight layers",
            code="shape_mismatch",
        )
    try:
        specs = tuple(
            LayerSpec(int(s["in_dim"]), int(s["out_dim"]), str(s["activation"]))
            for s in specs_doc
        )
        meta = CheckpointMeta(
            format_version=version,
            seed=int(meta_doc.get("seed", 0)),
            training_epochs=int(meta_doc.get("training_epochs", 0)),
            tag=str(meta_doc.get("tag", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"malformed checkpoint fields: {exc}") from exc

    layers = []
    for i, (spec, entry) in enumerate(zip(specs, layers_doc)):
        if not isinstance(entry, dict) or "w" not in entry or "b" not in entry:
            raise CheckpointFormatError(f"layer {i}: missing w/b payloads")
        w = _decode(entry["w"], spec.out_dim * spec.in_dim, f"layer {i} weights")
        b = _decode(entry["b"], spec.out_dim, f"layer {i} bias")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise CheckpointFormatError(f"layer {i}: non-finite values")
        layers.append(LayerWeights(w.reshape(spec.out_dim, spec.in_dim), b))
    try:
        return make_checkpoint(specs, layers, meta)
    except Exception as exc:
        raise CheckpointFormatError(
            f"checkpoint fails validation: {exc}", code="shape_mismatch"
        ) from exc


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_dict(ckpt), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointFormatError(f"{path}: not valid JSON ({exc})") from exc
    return checkpoint_from_dict(doc)
