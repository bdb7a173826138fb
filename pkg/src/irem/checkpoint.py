"""Model checkpoints: a JSON manifest plus a raw float32 parameter blob.

Blob layout (little-endian 32-bit floats, fixed order):

    for layer 1..18:   weight (C-order, shape fan_in x fan_out), bias
    for layer 1..17:   bn scale, bn shift, running mean, running var

The manifest records everything needed to rebuild the exact model family:
L and the encoder seed (B is redrawn bitwise from them), hidden width,
batch-norm momentum, the coordinate bounding box, the intensity scale, and
the epoch the checkpoint was taken at.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import FourierEncoder
from .network import DEPTH, NetworkParams, layer_sizes
from .volume import Box

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint"]

FORMAT = "irem-checkpoint-v1"


@dataclass(frozen=True)
class Checkpoint:
    """A trained model: encoder identity, parameters, and scaling metadata."""

    encoder: FourierEncoder
    params: NetworkParams
    box: Box
    intensity_scale: float
    epoch: int


def _blob_arrays(params: NetworkParams) -> list[np.ndarray]:
    arrays = []
    for w, b in zip(params.weights, params.biases):
        arrays.extend([w, b])
    for l in range(DEPTH - 1):
        arrays.extend(
            [
                params.bn_scale[l],
                params.bn_shift[l],
                params.running_mean[l],
                params.running_var[l],
            ]
        )
    return arrays


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    """Write ``<path>.json`` + ``<path>.bin``; returns the manifest path."""
    base = Path(path)
    if base.suffix in (".json", ".bin"):
        base = base.with_suffix("")
    manifest_path = base.with_suffix(".json")
    blob_path = base.with_suffix(".bin")
    manifest = {
        "format": FORMAT,
        "L": ckpt.encoder.L,
        "seed": ckpt.encoder.seed,
        "hidden": ckpt.params.hidden,
        "momentum": ckpt.params.momentum,
        "bbox": {
            "min": [float(v) for v in ckpt.box.lo],
            "max": [float(v) for v in ckpt.box.hi],
        },
        "intensity_scale": float(ckpt.intensity_scale),
        "epoch": int(ckpt.epoch),
        "params_file": blob_path.name,
    }
    base.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    blob = np.concatenate(
        [a.astype("<f4", copy=False).ravel() for a in _blob_arrays(ckpt.params)]
    )
    blob.tofile(blob_path)
    return manifest_path


def load_checkpoint(path) -> Checkpoint:
    manifest_path = Path(path)
    if manifest_path.suffix != ".json":
        manifest_path = manifest_path.with_suffix(".json")
    if not manifest_path.exists():
        raise FileNotFoundError(f"checkpoint manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != FORMAT:
        raise ValueError(f"{manifest_path}: unknown checkpoint format")
    L = int(manifest["L"])
    seed = int(manifest["seed"])
    hidden = int(manifest["hidden"])
    blob_path = manifest_path.parent / manifest["params_file"]
    if not blob_path.exists():
        raise FileNotFoundError(f"checkpoint blob not found: {blob_path}")
    blob = np.fromfile(blob_path, dtype="<f4")

    sizes = layer_sizes(L, hidden)
    weights, biases = [], []
    offset = 0

    def take(shape) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        if offset + count > blob.size:
            raise ValueError(f"{blob_path}: parameter blob too short")
        arr = blob[offset : offset + count].reshape(shape).copy()
        offset += count
        return arr

    for fan_in, fan_out in sizes:
        weights.append(take((fan_in, fan_out)))
        biases.append(take((fan_out,)))
    bn_scale, bn_shift, running_mean, running_var = [], [], [], []
    for _ in range(DEPTH - 1):
        bn_scale.append(take((hidden,)))
        bn_shift.append(take((hidden,)))
        running_mean.append(take((hidden,)))
        running_var.append(take((hidden,)))
    if offset != blob.size:
        raise ValueError(
            f"{blob_path}: blob holds {blob.size} floats, layout expects {offset}"
        )
    params = NetworkParams(
        L=L,
        hidden=hidden,
        weights=weights,
        biases=biases,
        bn_scale=bn_scale,
        bn_shift=bn_shift,
        running_mean=running_mean,
        running_var=running_var,
        momentum=float(manifest.get("momentum", 0.1)),
    )
    encoder = FourierEncoder(L=L, seed=seed)
    box = Box(manifest["bbox"]["min"], manifest["bbox"]["max"])
    return Checkpoint(
        encoder=encoder,
        params=params,
        box=box,
        intensity_scale=float(manifest["intensity_scale"]),
        epoch=int(manifest["epoch"]),
    )
