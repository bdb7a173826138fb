"""Dense-grid inference: evaluate the trained field on an isotropic lattice.

Evaluation runs in eval mode (pure), in configurable chunks so memory stays
bounded; chunking is invisible in the output.  Grid coordinates are scaled
through the model's stored bounding box exactly as during training.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint
from .encoding import FourierEncoder, encode_world_points
from .network import NetworkParams, forward
from .volume import Box, Volume

__all__ = [
    "GridSpec",
    "make_dense_grid",
    "reconstruct_volume",
    "reconstruct_checkpoint",
    "export_slices",
]

AXIS_NAMES = {"x": 0, "y": 1, "z": 2}
DEFAULT_CHUNK = 131072


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned sampling lattice: box corners plus per-axis spacing."""

    box: Box
    spacing: np.ndarray  # (3,) mm

    def __post_init__(self):
        spacing = np.asarray(self.spacing, dtype=np.float64).reshape(3)
        if np.any(spacing <= 0):
            raise ValueError(f"grid spacing must be positive, got {spacing}")
        if np.any(self.box.hi <= self.box.lo):
            raise ValueError("grid box must have positive extent on every axis")
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        # epsilon guards against 63.999999 floors when extent/spacing is integral
        n = np.floor(self.box.extent() / self.spacing + 1e-9).astype(int) + 1
        return (int(n[0]), int(n[1]), int(n[2]))

    @property
    def point_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz


def _grid_chunk(spec: GridSpec, start: int, stop: int) -> np.ndarray:
    """Grid coordinates for linear indices [start, stop), x-fastest."""
    nx, ny, _ = spec.dims
    lin = np.arange(start, stop, dtype=np.int64)
    idx = np.empty((lin.size, 3), dtype=np.float64)
    idx[:, 0] = lin % nx
    idx[:, 1] = (lin // nx) % ny
    idx[:, 2] = lin // (nx * ny)
    return spec.box.lo + idx * spec.spacing


def make_dense_grid(spec: GridSpec) -> np.ndarray:
    """All grid coordinates as an (N, 3) array in x-fastest order."""
    return _grid_chunk(spec, 0, spec.point_count)


def reconstruct_volume(
    encoder: FourierEncoder,
    params: NetworkParams,
    spec: GridSpec,
    intensity_scale: float,
    model_box: Box,
    chunk_size: int = DEFAULT_CHUNK,
) -> Volume:
    """Evaluate the network over the grid and assemble the output volume.

    ``model_box`` is the coordinate box the model was trained with (from its
    checkpoint); outputs are mapped back to original units through
    ``intensity_scale``.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    total = spec.point_count
    values = np.empty(total, dtype=np.float32)
    for start in range(0, total, chunk_size):
        stop = min(start + chunk_size, total)
        feats = encode_world_points(encoder, model_box, _grid_chunk(spec, start, stop))
        out, _ = forward(params, feats, "eval")
        values[start:stop] = out
    values *= np.float32(intensity_scale)
    data = values.reshape(spec.dims, order="F")
    return Volume(data, spec.spacing, spec.box.lo, np.eye(3))


def reconstruct_checkpoint(
    ckpt: Checkpoint,
    spec: GridSpec,
    encoder: FourierEncoder | None = None,
    chunk_size: int = DEFAULT_CHUNK,
) -> Volume:
    """Reconstruct from a checkpoint, optionally with a caller-owned encoder.

    A supplied encoder must match the checkpoint's (seed, L) identity.
    """
    if encoder is not None and (
        encoder.L != ckpt.encoder.L or encoder.seed != ckpt.encoder.seed
    ):
        raise ValueError(
            "encoder does not match checkpoint: "
            f"L {encoder.L} vs {ckpt.encoder.L}, seed {encoder.seed} vs {ckpt.encoder.seed}"
        )
    return reconstruct_volume(
        encoder if encoder is not None else ckpt.encoder,
        ckpt.params,
        spec,
        ckpt.intensity_scale,
        ckpt.box,
        chunk_size,
    )


def export_slices(volume: Volume, out_dir, axis: str = "z") -> list[Path]:
    """Write one 8-bit PGM per slice along ``axis`` with min-max windowing."""
    if axis not in AXIS_NAMES:
        raise ValueError(f"axis must be one of {sorted(AXIS_NAMES)}, got {axis!r}")
    ax = AXIS_NAMES[axis]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lo = float(volume.data.min())
    hi = float(volume.data.max())
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((volume.data - lo) / span * 255.0, 0, 255).astype(np.uint8)
    paths = []
    for i in range(volume.dims[ax]):
        sl = np.take(scaled, i, axis=ax)
        path = out / f"slice_{axis}{i:04d}.pgm"
        with open(path, "wb") as fh:
            fh.write(f"P5\n{sl.shape[1]} {sl.shape[0]}\n255\n".encode())
            fh.write(sl.tobytes())
        paths.append(path)
    return paths
