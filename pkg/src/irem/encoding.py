"""Fourier feature mapping of 3D coordinates.

Coordinates are first mapped into [0, 1]^3 via the bounding box of the
training stacks (the box travels with the model checkpoint), then projected
through a fixed Gaussian matrix B: the features are
[cos(2*pi*B.p), sin(2*pi*B.p)], giving 2L values per point.  B is drawn once
from a recorded seed and is never trained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import Box

__all__ = ["FourierEncoder", "fourier_encode", "encode_world_points"]

TWO_PI = np.float32(2.0 * np.pi)


@dataclass(frozen=True)
class FourierEncoder:
    """Fixed L x 3 Gaussian projection; ``feature_dim`` is 2L."""

    L: int
    seed: int
    B: np.ndarray = None  # drawn from seed when not supplied

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        B = self.B
        if B is None:
            rng = np.random.default_rng(self.seed)
            B = rng.standard_normal((self.L, 3)).astype(np.float32)
        else:
            B = np.asarray(B, dtype=np.float32)
            if B.shape != (self.L, 3):
                raise ValueError(f"B must have shape ({self.L}, 3), got {B.shape}")
        object.__setattr__(self, "B", B)

    @property
    def feature_dim(self) -> int:
        return 2 * self.L


def fourier_encode(encoder: FourierEncoder, points) -> np.ndarray:
    """Encode unit-cube coordinates into 2L Fourier features.

    ``points`` is (3,) or (N, 3); the result is (2L,) or (N, 2L) float32,
    the first L entries cos, the last L sin, in the row order of B.
    """
    pts = np.asarray(points, dtype=np.float32)
    single = pts.ndim == 1
    proj = TWO_PI * (np.atleast_2d(pts) @ encoder.B.T)
    feats = np.concatenate([np.cos(proj), np.sin(proj)], axis=1)
    return feats[0] if single else feats


def encode_world_points(encoder: FourierEncoder, box: Box, points) -> np.ndarray:
    """Encode world (mm) coordinates: box-scale to [0, 1]^3, then encode.

    This is the single path shared by training and reconstruction, so both
    see bitwise-identical features for the same world coordinate.
    """
    unit = box.to_unit(points).astype(np.float32)
    return fourier_encode(encoder, unit)
