"""Poisson observation model for deconvolution.

The forward operator A is a circular convolution with a nonnegative kernel
normalized to unit sum, the observation is y ~ Poisson(alpha * A x) with
photon scale alpha, and the data fidelity is the generalized
Kullback-Leibler divergence

    f(x) = sum_i [ y_i log(y_i / (alpha (Ax)_i)) + alpha (Ax)_i - y_i ]

with the 0*log(0) = 0 convention for zero counts, whose gradient is
grad f(x) = A^T(alpha*1 - y / (Ax)).  On the strictly positive orthant f
satisfies the relative-smoothness inequality D_f(x, x') <= L * D_h(x, x')
for Burg's entropy h with L = ||y||_1, which is what `nolip_bound` returns.
"""

import warnings

import numpy as np

from . import _kernels
from .errors import DomainError, FormatError, KernelSumWarning, ShapeError
from .geometry import BOUNDARY_TOL

__all__ = [
    "SPATIAL_KERNEL_LIMIT",
    "ConvolutionOperator",
    "PoissonProblem",
    "apply_forward",
    "apply_adjoint",
    "datafit_value",
    "datafit_grad",
    "nolip_bound",
    "sample_poisson",
    "load_kernel_file",
]

# Kernels up to this side length are convolved in the spatial domain; larger
# ones go through the FFT. Both paths agree to 1e-10.
SPATIAL_KERNEL_LIMIT = 31


class ConvolutionOperator:
    """Circular convolution with a nonnegative, unit-sum 2-D kernel.

    Immutable after construction. `mode` selects the compute path:
    "auto" (spatial up to SPATIAL_KERNEL_LIMIT, FFT above), "spatial", or
    "fft".
    """

    def __init__(self, kernel, shape, mode: str = "auto"):
        kernel = np.ascontiguousarray(kernel, dtype=np.float64)
        if kernel.ndim != 2:
            raise ShapeError(f"kernel must be 2-D, got shape {kernel.shape}")
        if not np.all(np.isfinite(kernel)):
            raise DomainError("kernel contains non-finite entries")
        if np.any(kernel < 0.0):
            raise DomainError("kernel entries must be nonnegative")
        total = float(kernel.sum())
        if total <= 0.0:
            raise DomainError("kernel must have positive sum")
        self.kernel = kernel / total
        h, w = int(shape[0]), int(shape[1])
        if h < 1 or w < 1:
            raise ShapeError(f"image shape must be positive, got {shape}")
        self.shape = (h, w)
        self.size = h * w
        kh, kw = self.kernel.shape
        self._center = (kh // 2, kw // 2)
        if mode not in ("auto", "spatial", "fft"):
            raise DomainError(f"mode must be auto|spatial|fft, got {mode!r}")
        if mode == "auto":
            mode = "spatial" if max(kh, kw) <= SPATIAL_KERNEL_LIMIT else "fft"
        self.mode = mode
        self._khat = self._embed_fft() if mode == "fft" else None

    def _embed_fft(self) -> np.ndarray:
        h, w = self.shape
        kh, kw = self.kernel.shape
        cr, cc = self._center
        kpad = np.zeros((h, w))
        for p in range(kh):
            for q in range(kw):
                kpad[(p - cr) % h, (q - cc) % w] += self.kernel[p, q]
        return np.fft.rfft2(kpad)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.size:
            raise ShapeError(
                f"operand has {x.size} elements, operator expects {self.size}"
            )
        if not np.all(np.isfinite(x)):
            raise DomainError("operand contains non-finite entries")
        return x

    def forward(self, x) -> np.ndarray:
        """Circular convolution A x; preserves the input's shape."""
        x = self._check(x)
        xi = x.reshape(self.shape)
        if self.mode == "spatial":
            out = _kernels.circ_conv2d(xi, self.kernel, *self._center)
        else:
            out = np.fft.irfft2(np.fft.rfft2(xi) * self._khat, s=self.shape)
        return out.reshape(x.shape)

    def adjoint(self, v) -> np.ndarray:
        """Adjoint A^T v (circular correlation); preserves the input's shape."""
        v = self._check(v)
        vi = v.reshape(self.shape)
        if self.mode == "spatial":
            out = _kernels.circ_corr2d(vi, self.kernel, *self._center)
        else:
            out = np.fft.irfft2(np.fft.rfft2(vi) * np.conj(self._khat), s=self.shape)
        return out.reshape(v.shape)


def apply_forward(A: ConvolutionOperator, x) -> np.ndarray:
    return A.forward(x)


def apply_adjoint(A: ConvolutionOperator, v) -> np.ndarray:
    return A.adjoint(v)


class PoissonProblem:
    """Observation y (counts), photon scale alpha, and forward operator A."""

    def __init__(self, y, alpha: float, A: ConvolutionOperator):
        y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
        if y.size != A.size:
            raise ShapeError(f"y has {y.size} elements, operator expects {A.size}")
        if not np.all(np.isfinite(y)):
            raise DomainError("y contains non-finite entries")
        if np.any(y < 0.0):
            raise DomainError("counts must be nonnegative")
        if np.any(y != np.floor(y)):
            raise DomainError("counts must be integer-valued")
        if not (alpha > 0.0):
            raise DomainError(f"alpha must be positive, got {alpha}")
        self.y = y
        self.alpha = float(alpha)
        self.A = A
        self.l1_of_y = float(np.sum(y))


def _interior_image(P: PoissonProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != P.A.size:
        raise ShapeError(f"x has {x.size} elements, operator expects {P.A.size}")
    if not np.all(np.isfinite(x)) or np.any(x < BOUNDARY_TOL):
        raise DomainError("x must be strictly positive (interior of dom h)")
    return x


def datafit_value(P: PoissonProblem, x) -> float:
    """Generalized KL data fidelity f(x) >= 0."""
    x = _interior_image(P, x)
    ax = P.A.forward(x)
    if np.any(ax <= 0.0):
        raise DomainError("A x has a nonpositive entry")
    m = P.alpha * ax
    y = P.y
    pos = y > 0.0
    val = float(np.sum(m) - P.l1_of_y)
    if np.any(pos):
        val += float(np.sum(y[pos] * (np.log(y[pos]) - np.log(m[pos]))))
    return val


def datafit_grad(P: PoissonProblem, x) -> np.ndarray:
    """grad f(x) = A^T(alpha*1 - y / (Ax))."""
    x = _interior_image(P, x)
    ax = P.A.forward(x)
    if np.any(ax <= 0.0):
        raise DomainError("A x has a nonpositive entry")
    return P.A.adjoint(P.alpha - P.y / ax)


def nolip_bound(P: PoissonProblem) -> float:
    """Relative-smoothness constant L_f = ||y||_1 of f against Burg's entropy."""
    return P.l1_of_y


def sample_poisson(x, A: ConvolutionOperator, alpha: float, seed: int) -> PoissonProblem:
    """Draw y_i ~ Poisson(alpha * (Ax)_i) i.i.d.; deterministic given seed."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != A.size:
        raise ShapeError(f"x has {x.size} elements, operator expects {A.size}")
    if not np.all(np.isfinite(x)) or np.any(x < BOUNDARY_TOL):
        raise DomainError("x must be strictly positive")
    if not (alpha > 0.0):
        raise DomainError(f"alpha must be positive, got {alpha}")
    rate = alpha * A.forward(x)
    rate = np.maximum(rate, 0.0)  # guard fp round-off from the FFT path
    rng = np.random.Generator(np.random.PCG64(seed))
    y = rng.poisson(rate).astype(np.float64)
    return PoissonProblem(y, alpha, A)


def load_kernel_file(path) -> np.ndarray:
    """Parse a text kernel file: first line "H W", then H rows of W decimals.

    The kernel is re-normalized to unit sum; a KernelSumWarning is emitted
    when the stored sum deviates from 1 by more than 1e-6.
    """
    try:
        with open(path, "r", encoding="ascii") as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise FormatError(f"cannot read kernel file {path}: {exc}") from exc
    if len(tokens) < 2:
        raise FormatError(f"kernel file {path} is missing the 'H W' header")
    try:
        h, w = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise FormatError(f"kernel file {path} has a malformed header") from exc
    if h < 1 or w < 1:
        raise FormatError(f"kernel file {path} declares empty shape {h}x{w}")
    values = tokens[2:]
    if len(values) != h * w:
        raise FormatError(
            f"kernel file {path} declares {h}x{w} entries but holds {len(values)}"
        )
    try:
        k = np.array([float(t) for t in values], dtype=np.float64).reshape(h, w)
    except ValueError as exc:
        raise FormatError(f"kernel file {path} has a non-numeric entry") from exc
    if not np.all(np.isfinite(k)) or np.any(k < 0.0):
        raise FormatError(f"kernel file {path} has negative or non-finite entries")
    total = float(k.sum())
    if total <= 0.0:
        raise FormatError(f"kernel file {path} sums to {total}, cannot normalize")
    if abs(total - 1.0) > 1e-6:
        warnings.warn(
            f"kernel file {path} sums to {total:.8g}; re-normalizing to 1",
            KernelSumWarning,
            stacklevel=2,
        )
    return k / total
