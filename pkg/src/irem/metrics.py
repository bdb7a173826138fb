"""PSNR and volumetric SSIM.

SSIM uses a separable 3D Gaussian window (size 11, sigma 1.5) over all
fully-contained window positions, constants C1 = (0.01*range)^2 and
C2 = (0.03*range)^2, computed in float64.  ``data_range`` defaults to the
reference volume's max - min and is recorded in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .volume import Volume

__all__ = ["MetricReport", "psnr", "ssim", "gaussian_window", "compare"]

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    data_range: float
    reference_id: str
    test_id: str


def gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    """1D Gaussian taps normalized to sum 1 (the 3D window is separable)."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return w / w.sum()


def _check_dims(a: Volume, b: Volume) -> None:
    if a.dims != b.dims:
        raise ValueError(f"volume dims differ: {a.dims} vs {b.dims}")


def psnr(a: Volume, b: Volume, data_range: float) -> float:
    """10*log10(range^2 / MSE); +inf for identical inputs."""
    _check_dims(a, b)
    if not data_range > 0:
        raise ValueError("data_range must be positive")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / mse)


def _windowed_mean(arr: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable valid-mode weighted local mean along all three axes."""
    out = arr
    for axis in range(3):
        out = sliding_window_view(out, taps.size, axis=axis) @ taps
    return out


def ssim(
    a: Volume,
    b: Volume,
    data_range: float,
    window_size: int = WINDOW_SIZE,
    sigma: float = WINDOW_SIGMA,
) -> float:
    """Mean local SSIM over a sliding 3D Gaussian window."""
    _check_dims(a, b)
    if not data_range > 0:
        raise ValueError("data_range must be positive")
    if min(a.dims) < window_size:
        raise ValueError(
            f"volume dims {a.dims} smaller than the {window_size}^3 window"
        )
    x = a.data.astype(np.float64)
    y = b.data.astype(np.float64)
    taps = gaussian_window(window_size, sigma)

    mu_x = _windowed_mean(x, taps)
    mu_y = _windowed_mean(y, taps)
    var_x = _windowed_mean(x * x, taps) - mu_x * mu_x
    var_y = _windowed_mean(y * y, taps) - mu_y * mu_y
    cov = _windowed_mean(x * y, taps) - mu_x * mu_y

    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(ssim_map.mean())


def compare(
    reference: Volume,
    test: Volume,
    data_range: float | None = None,
    reference_id: str = "reference",
    test_id: str = "test",
) -> MetricReport:
    """PSNR + SSIM of ``test`` against ``reference`` in one report."""
    if data_range is None:
        data_range = float(reference.data.max() - reference.data.min())
        if data_range == 0.0:
            raise ValueError("reference volume is constant; pass data_range explicitly")
    return MetricReport(
        psnr_db=psnr(reference, test, data_range),
        ssim=ssim(reference, test, data_range),
        data_range=float(data_range),
        reference_id=reference_id,
        test_id=test_id,
    )
