"""Blur kernel construction for the restoration tasks.

Kernel specs are strings: the builtin names `uniform9` (9x9 flat) and
`gaussian25` (25x25 isotropic Gaussian, sigma 1.6), or `file:<path>` for
the text format handled by load_kernel_file.
"""

import numpy as np

from ..errors import FormatError
from ..poisson import ConvolutionOperator, load_kernel_file

__all__ = ["kernel_array", "make_kernel", "GAUSSIAN_SIGMA"]

GAUSSIAN_SIGMA = 1.6


def kernel_array(spec: str) -> np.ndarray:
    """The kernel weights for a spec, normalized to sum 1."""
    if spec == "uniform9":
        return np.full((9, 9), 1.0 / 81.0)
    if spec == "gaussian25":
        r = np.arange(25, dtype=np.float64) - 12.0
        prof = np.exp(-(r**2) / (2.0 * GAUSSIAN_SIGMA**2))
        k = np.outer(prof, prof)
        return k / k.sum()
    if spec.startswith("file:"):
        return load_kernel_file(spec[len("file:") :])
    raise FormatError(
        f"unknown kernel spec {spec!r} (expected uniform9, gaussian25, or file:<path>)"
    )


def make_kernel(spec: str, shape, mode: str = "auto") -> ConvolutionOperator:
    """Circular convolution operator for a kernel spec on a given image shape."""
    return ConvolutionOperator(kernel_array(spec), shape, mode=mode)
