"""Vectorized numpy implementation of scattered cubic B-spline evaluation.

Same contract as the compiled kernel: ``coeffs`` is a prefiltered (nx, ny,
nz) float64 coefficient grid, ``points`` are (N, 3) voxel-space positions,
indices outside the grid fold back with mirror symmetry (period 2n-2).
"""

import numpy as np


def _fold(idx: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    m = np.mod(idx, period)
    return np.where(m >= n, period - m, m)


def _axis_weights(t: np.ndarray) -> np.ndarray:
    """Weights of the four support nodes for fractional offsets t in [0, 1)."""
    t2 = t * t
    t3 = t2 * t
    w = np.empty(t.shape + (4,), dtype=np.float64)
    w[..., 0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0
    w[..., 1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0
    w[..., 2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0
    w[..., 3] = t3 / 6.0
    return w


def eval_cubic_bspline_3d(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    if coeffs.ndim != 3:
        raise ValueError("coeffs must be a 3D array")
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be (N, 3)")
    offsets = np.arange(4)
    idx = []
    weights = []
    for axis in range(3):
        base = np.floor(pts[:, axis]).astype(np.int64)
        weights.append(_axis_weights(pts[:, axis] - base))
        idx.append(_fold(base[:, None] - 1 + offsets, coeffs.shape[axis]))
    gathered = coeffs[
        idx[0][:, :, None, None], idx[1][:, None, :, None], idx[2][:, None, None, :]
    ]
    w = (
        weights[0][:, :, None, None]
        * weights[1][:, None, :, None]
        * weights[2][:, None, None, :]
    )
    return np.einsum("nijk,nijk->n", gathered, w)
