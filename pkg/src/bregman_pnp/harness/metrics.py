"""Restoration quality metrics."""

import math

import numpy as np

from ..errors import ShapeError

__all__ = ["psnr", "PSNR_CAP"]

# Identical images would give +inf dB; report this sentinel instead.
PSNR_CAP = 200.0


def _pixels(x) -> np.ndarray:
    arr = getattr(x, "pixels", x)
    return np.asarray(arr, dtype=np.float64).reshape(-1)


def psnr(x, ref) -> float:
    """Peak signal-to-noise ratio in dB against peak value 1.

    Accepts ImagePlane objects or arrays; shapes must agree elementwise.
    """
    a, b = _pixels(x), _pixels(ref)
    if a.size != b.size:
        raise ShapeError(f"size mismatch: {a.size} vs {b.size}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP)
