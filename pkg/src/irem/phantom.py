"""Procedural test volumes.

``smooth_phantom`` is a gentle low-frequency field used for overfit sanity
checks; ``textured_phantom`` adds fine structure (radial rings at ~6 voxel
wavelength, oblique waves, small seeded blobs) that thick-slice averaging
visibly destroys, which is what the super-resolution comparisons need.
"""

from __future__ import annotations

import numpy as np

from .volume import Volume

__all__ = ["smooth_phantom", "textured_phantom"]


def _unit_grids(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    axis = np.linspace(0.0, 1.0, n)
    return np.meshgrid(axis, axis, axis, indexing="ij")


def smooth_phantom(n: int = 16, spacing: float = 1.0) -> Volume:
    """Deterministic smooth field in [~0.1, ~0.9], one cycle across the box."""
    u, v, w = _unit_grids(n)
    field = (
        0.5
        + 0.2 * np.sin(np.pi * (u + v)) * np.cos(np.pi * w)
        + 0.15 * np.exp(-((u - 0.6) ** 2 + (v - 0.4) ** 2 + (w - 0.5) ** 2) / 0.08)
    )
    return Volume(
        field.astype(np.float32), [spacing] * 3, np.zeros(3), np.eye(3)
    )


def textured_phantom(n: int = 64, spacing: float = 1.0, seed: int = 0) -> Volume:
    """Seeded field with structure finer than a thick-slice slab."""
    u, v, w = _unit_grids(n)
    i, j, k = np.meshgrid(*(np.arange(n, dtype=np.float64),) * 3, indexing="ij")
    center = (n - 1) / 2.0
    radius = np.sqrt((i - center) ** 2 + (j - center) ** 2 + (k - center) ** 2)

    field = 0.5 + 0.20 * np.sin(2 * np.pi * (0.55 * u + 0.8 * v + 0.35 * w))
    field += 0.16 * np.sin(2 * np.pi * radius / 6.0) * np.exp(-radius / (0.9 * n))
    field += 0.08 * np.sin(2 * np.pi * (0.9 * i + 1.3 * j + 0.7 * k) / 7.0)

    rng = np.random.default_rng(seed)
    for _ in range(10):
        pos = rng.uniform(0.15 * n, 0.85 * n, size=3)
        sigma = rng.uniform(1.5, 3.0)
        amp = rng.uniform(0.10, 0.18) * rng.choice([-1.0, 1.0])
        d2 = (i - pos[0]) ** 2 + (j - pos[1]) ** 2 + (k - pos[2]) ** 2
        field += amp * np.exp(-d2 / (2.0 * sigma**2))

    field = np.clip(field, 0.02, 0.98)
    return Volume(
        field.astype(np.float32), [spacing] * 3, np.zeros(3), np.eye(3)
    )
