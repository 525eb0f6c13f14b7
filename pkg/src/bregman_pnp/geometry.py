"""Legendre potentials and the Bregman geometry used by every solver.

Two separable potentials are supported:

* Euclidean      h(x) = 0.5*||x||^2        dom(h) = R^n
* Burg's entropy h(x) = -sum_i log(x_i)    dom(h) = R^n_{++}

Both have diagonal Hessians, and their conjugate gradients are available in
closed form (Euclidean: identity; Burg: grad h(x) = grad h*(x) = -1/x), so
the mirror step grad h*(grad h(x) - tau*u) and the Bregman divergence

    D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>

are exact elementwise computations.  All vectors are dense, contiguous,
double precision.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DivergenceInfinity, DomainError, MirrorDomainError, ShapeError

__all__ = [
    "BOUNDARY_TOL",
    "EPS_IMAGE",
    "PotentialKind",
    "LegendrePotential",
    "euclidean",
    "burg",
    "in_domain",
    "h_value",
    "h_grad",
    "h_conj_grad",
    "hess_inv_apply",
    "bregman_div",
    "mirror_step",
]

# "strictly positive" is enforced as x_i >= BOUNDARY_TOL: smaller values
# would silently overflow -1/x and log(x).
BOUNDARY_TOL = 1e-12

# Image pixels are restored in [EPS_IMAGE, 1]; the floor keeps them well
# inside dom(h) for Burg's entropy.
EPS_IMAGE = 1e-3


class PotentialKind(Enum):
    EUCLIDEAN = "euclidean"
    BURG = "burg"


@dataclass(frozen=True)
class LegendrePotential:
    """A separable Legendre-type potential on R^n."""

    kind: PotentialKind
    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ShapeError(f"dimension must be positive, got {self.dimension}")


def euclidean(dimension: int) -> LegendrePotential:
    return LegendrePotential(PotentialKind.EUCLIDEAN, dimension)


def burg(dimension: int) -> LegendrePotential:
    return LegendrePotential(PotentialKind.BURG, dimension)


def _as_vector(p: LegendrePotential, x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size != p.dimension:
        raise ShapeError(
            f"{name} has {x.size} elements, potential has dimension {p.dimension}"
        )
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} contains non-finite entries")
    return x.reshape(-1)


def in_domain(p: LegendrePotential, x) -> bool:
    """True when x lies in dom(h) (to within the boundary tolerance)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size != p.dimension or not np.all(np.isfinite(x)):
        return False
    if p.kind is PotentialKind.EUCLIDEAN:
        return True
    return bool(np.all(x >= BOUNDARY_TOL))


def _require_interior(p: LegendrePotential, x: np.ndarray, name: str) -> None:
    if p.kind is PotentialKind.BURG and np.any(x < BOUNDARY_TOL):
        raise DomainError(
            f"{name} must be strictly positive (>= {BOUNDARY_TOL:g}) for Burg's "
            f"entropy; min entry {x.min():g}"
        )


def h_value(p: LegendrePotential, x) -> float:
    """Evaluate the potential h at x."""
    x = _as_vector(p, x, "x")
    if p.kind is PotentialKind.EUCLIDEAN:
        return 0.5 * float(np.dot(x, x))
    _require_interior(p, x, "x")
    return -float(np.sum(np.log(x)))


def h_grad(p: LegendrePotential, x) -> np.ndarray:
    """Gradient of h: identity (Euclidean) or -1/x (Burg)."""
    x = _as_vector(p, x, "x")
    if p.kind is PotentialKind.EUCLIDEAN:
        return x.copy()
    _require_interior(p, x, "x")
    return -1.0 / x


def h_conj_grad(p: LegendrePotential, z) -> np.ndarray:
    """Gradient of the conjugate h*; the inverse map of h_grad."""
    z = _as_vector(p, z, "z")
    if p.kind is PotentialKind.EUCLIDEAN:
        return z.copy()
    if np.any(z >= 0.0):
        raise DomainError(
            "z must be strictly negative elementwise for Burg's entropy "
            f"(dom(h*) = R^n_--); max entry {z.max():g}"
        )
    return -1.0 / z


def hess_inv_apply(p: LegendrePotential, y, v) -> np.ndarray:
    """Apply the inverse Hessian of h at y to v (diagonal for both kinds)."""
    y = _as_vector(p, y, "y")
    v = _as_vector(p, v, "v")
    if p.kind is PotentialKind.EUCLIDEAN:
        return v.copy()
    _require_interior(p, y, "y")
    return y * y * v


def bregman_div(p: LegendrePotential, x, y) -> float:
    """Bregman divergence D_h(x, y); nonnegative, zero iff x = y.

    Raises DivergenceInfinity when x is outside dom(h) (the divergence is
    then +infinity by convention) and DomainError when y is not interior.
    """
    x = _as_vector(p, x, "x")
    y = _as_vector(p, y, "y")
    if p.kind is PotentialKind.EUCLIDEAN:
        d = x - y
        return 0.5 * float(np.dot(d, d))
    if np.any(y < BOUNDARY_TOL):
        raise DomainError("y must be interior to dom(h) for Burg's entropy")
    if np.any(x < BOUNDARY_TOL):
        raise DivergenceInfinity(
            "D_h(x, y) = +inf: x outside dom(h) of Burg's entropy "
            f"(min entry {x.min():g})"
        )
    # Per-coordinate x/y - log(x/y) - 1, written as r - log1p(r) with
    # r = x/y - 1 to stay accurate near x = y.
    r = x / y - 1.0
    total = float(np.sum(r - np.log1p(r)))
    # The sum is mathematically >= 0; clamp away rounding at the ulp level.
    return max(total, 0.0)


def mirror_step(p: LegendrePotential, x, u, tau: float) -> np.ndarray:
    """One mirror step: grad h*(grad h(x) - tau*u).

    For Burg's entropy this equals x / (1 + tau*x*u) elementwise whenever
    1 + tau*x*u > 0; if any coordinate violates that, the image point has
    left dom(grad h*) and MirrorDomainError is raised.
    """
    x = _as_vector(p, x, "x")
    u = _as_vector(p, u, "u")
    if tau <= 0.0:
        raise DomainError(f"tau must be positive, got {tau}")
    if p.kind is PotentialKind.EUCLIDEAN:
        return x - tau * u
    _require_interior(p, x, "x")
    z = -1.0 / x - tau * u
    if np.any(z >= 0.0):
        # Equivalent to some coordinate of 1 + tau*x*u <= 0.
        bad = int(np.argmax(z >= 0.0))
        raise MirrorDomainError(
            "mirror step left dom(grad h*): 1 + tau*x*u <= 0 at coordinate "
            f"{bad} (x={x[bad]:g}, u={u[bad]:g}, tau={tau:g})"
        )
    return -1.0 / z
