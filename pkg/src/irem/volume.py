"""Volumes, rigid transforms, and the native header+raw file format.

A :class:`Volume` is a 3D scalar grid with world-space geometry (spacing in
mm, origin, axis direction matrix).  World coordinates are millimetres,
right-handed.  The normalized space N is simply the world frame that all
stack-to-N rigid transforms target; in simulation that is the HR frame and
every transform is the identity, for externally supplied stacks the
transforms are inputs (registration is never estimated here).

All types are immutable after construction; every operation in this module
is a pure function, safe to call concurrently.

File format: ``<name>.json`` holding ``{dims, spacing, origin, direction}``
next to ``<name>.raw`` holding exactly prod(dims) little-endian IEEE-754
32-bit floats, x-fastest.  Rigid transforms are stored as
``{rotation: [9 row-major], translation: [3]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Volume",
    "RigidTransform",
    "NormalizedStackSet",
    "Box",
    "load_volume",
    "save_volume",
    "load_transform",
    "save_transform",
    "voxel_to_world",
    "apply_rigid",
    "compose_rigid",
    "invert_rigid",
    "normalize_intensities",
]

_ORTHO_TOL = 1e-6


def _as_matrix3(value, name: str) -> np.ndarray:
    m = np.asarray(value, dtype=np.float64)
    if m.shape == (9,):
        m = m.reshape(3, 3)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be a 3x3 matrix, got shape {m.shape}")
    return m


def _check_orthonormal(m: np.ndarray, name: str, require_proper: bool) -> None:
    if not np.allclose(m @ m.T, np.eye(3), atol=_ORTHO_TOL):
        raise ValueError(f"{name} is not orthonormal")
    det = float(np.linalg.det(m))
    if require_proper:
        if abs(det - 1.0) > _ORTHO_TOL:
            raise ValueError(f"{name} must have det +1, got {det}")
    elif abs(abs(det) - 1.0) > _ORTHO_TOL:
        raise ValueError(f"{name} must have |det| 1, got {det}")


@dataclass(frozen=True)
class Volume:
    """3D scalar grid with voxel spacing, origin, and axis orientation.

    ``data`` is indexed ``data[i, j, k]`` with i along x; serialization is
    x-fastest regardless of the in-memory stride order.
    """

    data: np.ndarray  # (nx, ny, nz) float32
    spacing: np.ndarray  # (3,) mm per voxel
    origin: np.ndarray  # (3,) mm, world position of voxel (0, 0, 0)
    direction: np.ndarray  # (3, 3) orthonormal axis matrix, columns = axes

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got {data.ndim}D")
        if data.dtype != np.float32:
            data = data.astype(np.float32)
        if not np.all(np.isfinite(data)):
            raise ValueError("volume contains non-finite intensities")
        spacing = np.asarray(self.spacing, dtype=np.float64).reshape(3)
        if np.any(spacing <= 0):
            raise ValueError(f"spacing must be positive, got {spacing}")
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        direction = _as_matrix3(self.direction, "direction")
        _check_orthonormal(direction, "direction", require_proper=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def voxel_count(self) -> int:
        return int(self.data.size)

    def world_box(self, transform: "RigidTransform | None" = None) -> "Box":
        """Axis-aligned box spanned by the voxel-center corners.

        When ``transform`` is given the corners are mapped through it first,
        so the box lives in the transform's target frame.
        """
        nx, ny, nz = self.dims
        corners = np.array(
            [(i, j, k) for i in (0, nx - 1) for j in (0, ny - 1) for k in (0, nz - 1)],
            dtype=np.float64,
        )
        world = voxel_to_world(self, corners)
        if transform is not None:
            world = apply_rigid(transform, world)
        return Box(world.min(axis=0), world.max(axis=0))


@dataclass(frozen=True)
class RigidTransform:
    """6-DoF rotation+translation mapping a stack's native space into N."""

    rotation: np.ndarray  # (3, 3), orthonormal, det +1
    translation: np.ndarray  # (3,) mm

    def __post_init__(self):
        rotation = _as_matrix3(self.rotation, "rotation")
        _check_orthonormal(rotation, "rotation", require_proper=True)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in mm, used for grid extents and coordinate scaling."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def union(self, other: "Box") -> "Box":
        return Box(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    def to_unit(self, points: np.ndarray) -> np.ndarray:
        """Map mm coordinates into the unit cube spanned by this box."""
        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.lo) / self.extent()


@dataclass(frozen=True)
class NormalizedStackSet:
    """LR stacks rescaled to a common [0, 1] range, with their transforms."""

    stacks: list[Volume]
    transforms: list[RigidTransform]
    intensity_scale: float = field(default=1.0)

    def __post_init__(self):
        if not self.stacks:
            raise ValueError("stack set must contain at least one stack")
        if len(self.transforms) != len(self.stacks):
            raise ValueError(
                f"{len(self.stacks)} stacks but {len(self.transforms)} transforms"
            )
        if not self.intensity_scale > 0:
            raise ValueError("intensity_scale must be positive")
        object.__setattr__(self, "stacks", list(self.stacks))
        object.__setattr__(self, "transforms", list(self.transforms))
        object.__setattr__(self, "intensity_scale", float(self.intensity_scale))

    def world_box(self) -> Box:
        """Union bounding box of all stacks in the normalized frame."""
        box = self.stacks[0].world_box(self.transforms[0])
        for stack, t in zip(self.stacks[1:], self.transforms[1:]):
            box = box.union(stack.world_box(t))
        return box


def voxel_to_world(volume: Volume, index) -> np.ndarray:
    """World coordinate (mm) of one or many voxel indices.

    ``index`` may be a single (3,) triple or an (N, 3) array; the result has
    the same leading shape.  Indices must lie inside the grid.
    """
    idx = np.asarray(index, dtype=np.float64)
    single = idx.ndim == 1
    idx = np.atleast_2d(idx)
    if idx.shape[-1] != 3:
        raise ValueError(f"index must have 3 components, got shape {idx.shape}")
    dims = np.asarray(volume.dims)
    if np.any(idx < 0) or np.any(idx > dims - 1):
        raise IndexError("voxel index out of range")
    world = (volume.spacing * idx) @ volume.direction.T + volume.origin
    return world[0] if single else world


def apply_rigid(transform: RigidTransform, points) -> np.ndarray:
    """Apply rotation then translation to one or many points."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    out = np.atleast_2d(pts) @ transform.rotation.T + transform.translation
    return out[0] if single else out


def compose_rigid(outer: RigidTransform, inner: RigidTransform) -> RigidTransform:
    """Transform equal to applying ``inner`` first, then ``outer``."""
    return RigidTransform(
        outer.rotation @ inner.rotation,
        outer.rotation @ inner.translation + outer.translation,
    )


def invert_rigid(transform: RigidTransform) -> RigidTransform:
    rt = transform.rotation.T
    return RigidTransform(rt, -rt @ transform.translation)


def normalize_intensities(
    stacks: list[Volume], transforms: list[RigidTransform]
) -> NormalizedStackSet:
    """Divide every stack by the global intensity maximum.

    The maximum is recorded as ``intensity_scale`` so reconstruction can map
    network outputs back to the original units.  Negative intensities and
    all-zero inputs are rejected (the scale would be meaningless).
    """
    if not stacks:
        raise ValueError("no stacks to normalize")
    for i, stack in enumerate(stacks):
        if float(stack.data.min()) < 0:
            raise ValueError(f"stack {i} has negative intensities")
    scale = max(float(stack.data.max()) for stack in stacks)
    if scale == 0.0:
        raise ValueError("all stacks are zero; intensity scale is undefined")
    scaled = [
        Volume(s.data / np.float32(scale), s.spacing, s.origin, s.direction)
        for s in stacks
    ]
    return NormalizedStackSet(scaled, list(transforms), scale)


def _paths_for(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix == ".json":
        return p, p.with_suffix(".raw")
    if p.suffix == ".raw":
        return p.with_suffix(".json"), p
    return p.with_suffix(".json"), p.with_suffix(".raw")


def save_volume(volume: Volume, path) -> Path:
    """Write the header+raw pair; returns the header path."""
    header_path, raw_path = _paths_for(path)
    header = {
        "dims": [int(d) for d in volume.dims],
        "spacing": [float(s) for s in volume.spacing],
        "origin": [float(o) for o in volume.origin],
        "direction": [float(v) for v in volume.direction.reshape(9)],
    }
    header_path.parent.mkdir(parents=True, exist_ok=True)
    with open(header_path, "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    volume.data.astype("<f4", copy=False).ravel(order="F").tofile(raw_path)
    return header_path


def load_volume(path) -> Volume:
    """Load a header+raw pair written by :func:`save_volume`."""
    header_path, raw_path = _paths_for(path)
    if not header_path.exists():
        raise FileNotFoundError(f"volume header not found: {header_path}")
    if not raw_path.exists():
        raise FileNotFoundError(f"volume raw data not found: {raw_path}")
    with open(header_path) as fh:
        header = json.load(fh)
    try:
        dims = [int(d) for d in header["dims"]]
        spacing = header["spacing"]
        origin = header["origin"]
        direction = header["direction"]
    except KeyError as exc:
        raise ValueError(f"volume header {header_path} missing field {exc}") from exc
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise ValueError(f"bad dims in {header_path}: {dims}")
    raw = np.fromfile(raw_path, dtype="<f4")
    expected = dims[0] * dims[1] * dims[2]
    if raw.size != expected:
        raise ValueError(
            f"{raw_path}: header declares {expected} voxels, raw holds {raw.size}"
        )
    data = raw.reshape(dims, order="F")
    return Volume(data, spacing, origin, direction)


def save_transform(transform: RigidTransform, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "rotation": [float(v) for v in transform.rotation.reshape(9)],
        "translation": [float(v) for v in transform.translation],
    }
    with open(p, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return p


def load_transform(path) -> RigidTransform:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"transform file not found: {p}")
    with open(p) as fh:
        payload = json.load(fh)
    try:
        rotation = payload["rotation"]
        translation = payload["translation"]
    except KeyError as exc:
        raise ValueError(f"transform file {p} missing field {exc}") from exc
    return RigidTransform(np.asarray(rotation).reshape(3, 3), translation)
