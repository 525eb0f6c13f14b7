"""Bregman noise model for Burg's entropy: multivariate inverse gamma.

With h the Burg entropy, the observation model p(y|x) proportional to
exp(-gamma * D_h(x, y)) factorizes into independent inverse-gamma
coordinates y_i ~ IG(shape gamma - 1, scale gamma * x_i).  The level gamma
plays the role of an inverse noise strength: the mean is gamma/(gamma-2) x
(for gamma > 2), the variance gamma^2 / ((gamma-2)^2 (gamma-3)) x^2 (for
gamma > 3), and as gamma grows the noise concentrates on x.

Sampling goes through the gamma distribution: z_i ~ Gamma(gamma - 1,
rate gamma*x_i) and y_i = 1/z_i, which is exact and deterministic per seed.
"""

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, ParameterError
from .geometry import BOUNDARY_TOL

__all__ = [
    "sample_ig_noise",
    "ig_log_density",
    "noise_moments",
]


def _positive_vector(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise DomainError(f"{name} must be non-empty")
    if not np.all(np.isfinite(x)) or np.any(x < BOUNDARY_TOL):
        raise DomainError(f"{name} must be strictly positive elementwise")
    return x


def sample_ig_noise(x, gamma: float, seed: int) -> np.ndarray:
    """Draw y_i ~ IG(gamma - 1, gamma * x_i) i.i.d.; deterministic given seed."""
    x = _positive_vector(x, "x")
    if not (gamma > 1.0):
        raise ParameterError(f"gamma must exceed 1 for the density to normalize, got {gamma}")
    rng = np.random.Generator(np.random.PCG64(seed))
    # Gamma(shape a, rate b) = Gamma(shape a, scale 1/b); reciprocal gives IG.
    z = rng.gamma(shape=gamma - 1.0, scale=1.0 / (gamma * x), size=x.shape)
    return 1.0 / z


def ig_log_density(y, x, gamma: float) -> float:
    """Log of the exactly normalized product inverse-gamma density.

    log p(y|x) = sum_i [(gamma-1) log(gamma x_i) - log Gamma(gamma-1)
                        - gamma log y_i - gamma x_i / y_i]

    which equals -gamma * D_h(x, y) + rho(x) for an x-only term rho.
    """
    y = _positive_vector(y, "y")
    x = _positive_vector(x, "x")
    if y.size != x.size:
        raise DomainError(f"y has {y.size} elements, x has {x.size}")
    if not (gamma > 1.0):
        raise ParameterError(f"gamma must exceed 1, got {gamma}")
    a = gamma - 1.0
    return float(
        np.sum(a * np.log(gamma * x) - gammaln(a) - gamma * np.log(y) - gamma * x / y)
    )


def noise_moments(gamma: float, x, include_variance: bool = True):
    """Closed-form mean and variance of the inverse-gamma noise around x.

    Returns (mean, variance). The mean exists for gamma > 2 and the variance
    for gamma > 3; requesting a moment below its threshold raises
    ParameterError. Pass include_variance=False to get the partial result
    (mean, None) when 2 < gamma <= 3.
    """
    x = _positive_vector(x, "x")
    if not (gamma > 2.0):
        raise ParameterError(f"mean requires gamma > 2, got {gamma}")
    mean = gamma / (gamma - 2.0) * x
    if not include_variance:
        return mean, None
    if not (gamma > 3.0):
        raise ParameterError(f"variance requires gamma > 3, got {gamma}")
    variance = gamma**2 / ((gamma - 2.0) ** 2 * (gamma - 3.0)) * x**2
    return mean, variance
