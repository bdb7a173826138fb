"""Synthesis of anisotropic thick-slice LR stacks from an HR volume.

Slice profile is a boxcar: each LR voxel is the plain mean of the k
consecutive HR voxels along the slice axis, so in-plane resolution is
untouched and the LR voxel center sits at the mean of its source centers.
Non-divisible extents are an error rather than an implicit crop, so the
evaluation grid never silently desynchronizes from the ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .volume import NormalizedStackSet, RigidTransform, Volume, normalize_intensities

__all__ = [
    "ORIENTATION_AXES",
    "SimulationConfig",
    "downsample_axis",
    "simulate_stacks",
    "simulate_lr_stacks",
]

# Thick-axis convention matching scanner geometry: an axial stack has thick
# slices along z, coronal along y, sagittal along x.
ORIENTATION_AXES = {"sagittal": 0, "coronal": 1, "axial": 2}


@dataclass(frozen=True)
class SimulationConfig:
    """Downsampling factor, requested orientations, and a reserved seed.

    The seed is unused in the noiseless default but kept in the interface so
    additive-noise extensions do not change call sites.
    """

    factor: int
    orientations: tuple[str, ...] = ("axial", "coronal", "sagittal")
    seed: int = 0

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError(f"factor must be >= 1, got {self.factor}")
        if not self.orientations:
            raise ValueError("at least one orientation is required")
        unknown = [o for o in self.orientations if o not in ORIENTATION_AXES]
        if unknown:
            raise ValueError(f"unknown orientations {unknown}")
        object.__setattr__(self, "orientations", tuple(self.orientations))


def downsample_axis(hr: Volume, axis: int, k: int) -> Volume:
    """Boxcar-average ``k`` consecutive voxels along ``axis``.

    Output spacing along the axis is multiplied by k and the origin shifts
    by (k-1)/2 source voxels so output voxel centers line up with the mean
    of their source centers.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1, or 2, got {axis}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = hr.dims[axis]
    if n % k != 0:
        raise ValueError(
            f"dims[{axis}] = {n} is not divisible by k = {k}; crop the input first"
        )
    if k == 1:
        return hr
    moved = np.moveaxis(hr.data, axis, 0).astype(np.float64)
    blocks = moved.reshape(n // k, k, *moved.shape[1:])
    lr = np.moveaxis(blocks.mean(axis=1), 0, axis).astype(np.float32)
    spacing = hr.spacing.copy()
    spacing[axis] *= k
    origin = hr.origin + hr.direction[:, axis] * hr.spacing[axis] * (k - 1) / 2.0
    return Volume(lr, spacing, origin, hr.direction)


def simulate_stacks(
    hr: Volume, cfg: SimulationConfig
) -> tuple[list[Volume], list[RigidTransform]]:
    """One raw-intensity LR stack per requested orientation.

    All stacks share the HR world frame, so every transform is the identity.
    """
    stacks = [downsample_axis(hr, ORIENTATION_AXES[o], cfg.factor) for o in cfg.orientations]
    transforms = [RigidTransform.identity() for _ in stacks]
    return stacks, transforms


def simulate_lr_stacks(hr: Volume, cfg: SimulationConfig) -> NormalizedStackSet:
    """Simulated stacks with intensities normalized to the training range."""
    stacks, transforms = simulate_stacks(hr, cfg)
    return normalize_intensities(stacks, transforms)
