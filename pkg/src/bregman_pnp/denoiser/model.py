"""The Bregman Score Denoiser and its derived potentials.

The learned potential is g(y) = 0.5*||y - N(y)||^2 with N the potential
network; its exact input-gradient comes from the reverse-mode engine. The
denoising map in geometry h with relaxation strength s in (0,1] is

    B(y) = y - s * (hess h(y))^-1 grad g(y)

(Burg: y - s*y^2*grad g(y); Euclidean: the gradient-step denoiser
y - s*grad g(y)).  Two induced potentials make B a Bregman proximal map:

    psi(y) = -h(y) + <grad h(y), y> - s*g(y)
    phi(x) = s*g(y) - D_h(x, y)   for  x = B(y)

phi is only computable along the denoiser's trajectory, which is what
`phi_along_trajectory` evaluates.  `convexity_probe` measures the margin of
the second-order condition under which B is a Bregman prox in the Burg
geometry:

    <hess(s*g)(y) d, d>  <=  sum_i ((1 - 2 y s*grad g(y)) / y^2)_i d_i^2
"""

import warnings

import numpy as np

from ..errors import DomainError, RangeViolation, RangeWarning, ShapeError
from ..geometry import (
    BOUNDARY_TOL,
    EPS_IMAGE,
    LegendrePotential,
    PotentialKind,
    bregman_div,
    h_grad,
    h_value,
    hess_inv_apply,
)
from . import autodiff as ad
from .network import ArchConfig, PotentialNetwork, load_model, save_model

__all__ = [
    "ScoreDenoiserModel",
    "g_value",
    "g_grad",
    "denoise",
    "psi_value",
    "phi_along_trajectory",
    "convexity_probe",
]

_KIND_NAMES = {"burg": PotentialKind.BURG, "euclidean": PotentialKind.EUCLIDEAN}


class ScoreDenoiserModel:
    """Potential network + solver geometry + relaxation strength."""

    def __init__(self, network: PotentialNetwork, kind: PotentialKind = PotentialKind.BURG,
                 strength: float = 1.0, inv_gamma_range=(0.0, 0.1), metadata=None):
        if not (0.0 < strength <= 1.0):
            raise DomainError(f"strength must lie in (0, 1], got {strength}")
        self.network = network
        self.kind = kind
        self.strength = float(strength)
        self.inv_gamma_range = (float(inv_gamma_range[0]), float(inv_gamma_range[1]))
        self.metadata = dict(metadata or {})

    @classmethod
    def fresh(cls, arch: ArchConfig = None, seed: int = 0,
              kind: PotentialKind = PotentialKind.BURG, strength: float = 1.0):
        """Randomly initialized model (identity denoiser: zero tail weights)."""
        network = PotentialNetwork.initialize(arch or ArchConfig(), seed)
        return cls(network, kind=kind, strength=strength)

    def save(self, path) -> None:
        save_model(path, self.network, self.kind.value, self.strength, {
            "inv_gamma_range": list(self.inv_gamma_range),
            **self.metadata,
        })

    @classmethod
    def load(cls, path) -> "ScoreDenoiserModel":
        network, kind_name, strength, meta = load_model(path)
        kind = _KIND_NAMES.get(kind_name, PotentialKind.BURG)
        rng = meta.get("inv_gamma_range", [0.0, 0.1])
        return cls(network, kind=kind, strength=strength,
                   inv_gamma_range=(rng[0], rng[1]), metadata=meta)

    def potential(self, dimension: int) -> LegendrePotential:
        return LegendrePotential(self.kind, dimension)


def _to_bchw(y: np.ndarray):
    """View a 1-D or 2-D array as a (1,1,H,W) batch; returns (batch, original shape)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        return y.reshape(1, 1, 1, -1), y.shape
    if y.ndim == 2:
        return y.reshape(1, 1, *y.shape), y.shape
    raise ShapeError(f"expected a 1-D or 2-D array, got shape {y.shape}")


def _check_input(M: ScoreDenoiserModel, y: np.ndarray, gamma: float) -> None:
    if not np.all(np.isfinite(y)):
        raise DomainError("y contains non-finite entries")
    if M.kind is PotentialKind.BURG and np.any(y < BOUNDARY_TOL):
        raise DomainError("y must be strictly positive (interior of dom h)")
    lo, hi = M.inv_gamma_range
    inv_gamma = 1.0 / gamma if gamma != 0 else np.inf
    if not (lo < inv_gamma < hi):
        warnings.warn(
            f"denoiser evaluated at 1/gamma = {inv_gamma:.6g}, outside the "
            f"trained range ({lo:g}, {hi:g})",
            RangeWarning,
            stacklevel=3,
        )


def _network_output(M: ScoreDenoiserModel, y: np.ndarray, gamma: float) -> np.ndarray:
    """N(y) as a plain array (no graph)."""
    yb, _ = _to_bchw(y)
    with ad.no_grad():
        out = M.network.forward(
            ad.constant(yb), 1.0 / gamma, M.network.param_tensors()
        )
    return out.data


def g_value(M: ScoreDenoiserModel, y, gamma: float) -> float:
    """The learned potential 0.5*||y - N(y)||^2 (unscaled by strength)."""
    y = np.asarray(y, dtype=np.float64)
    _check_input(M, y, gamma)
    yb, _ = _to_bchw(y)
    n_out = _network_output(M, y, gamma)
    diff = yb - n_out
    return 0.5 * float(np.sum(diff * diff))


def g_grad(M: ScoreDenoiserModel, y, gamma: float) -> np.ndarray:
    """Exact reverse-mode gradient of g_value with respect to y."""
    y = np.asarray(y, dtype=np.float64)
    _check_input(M, y, gamma)
    yb, shape = _to_bchw(y)
    y_t = ad.parameter(yb)
    n_t = M.network.forward(y_t, 1.0 / gamma, M.network.param_tensors())
    d = ad.sub(y_t, n_t)
    g_t = ad.scale(ad.reduce_sum(ad.mul(d, d)), 0.5)
    (gy,) = ad.grad(g_t, [y_t])
    return gy.data.reshape(shape)


def denoise(M: ScoreDenoiserModel, y, gamma: float, events=None,
            strength: float = None) -> np.ndarray:
    """B(y) = y - s*(hess h(y))^-1 grad g(y), clamped only on domain violation.

    If the output leaves the interior of dom(h), it is clamped to
    [EPS_IMAGE, 1] and a RangeViolation is appended to `events` (when given).
    """
    y = np.asarray(y, dtype=np.float64)
    s = M.strength if strength is None else float(strength)
    gy = g_grad(M, y, gamma)
    p = M.potential(y.size)
    step = hess_inv_apply(p, y.reshape(-1), gy.reshape(-1)).reshape(y.shape)
    out = y - s * step
    if M.kind is PotentialKind.BURG and np.any(out < BOUNDARY_TOL):
        violation = RangeViolation(
            count=int(np.sum(out < BOUNDARY_TOL)),
            min_value=float(out.min()),
            context="denoiser output left int dom(h); clamped to [eps, 1]",
        )
        if events is not None:
            events.append(violation)
        out = np.clip(out, EPS_IMAGE, 1.0)
    return out


def psi_value(M: ScoreDenoiserModel, y, gamma: float, strength: float = None) -> float:
    """psi(y) = -h(y) + <grad h(y), y> - s*g(y) (Burg: sum log y - s*g(y) - n)."""
    y = np.asarray(y, dtype=np.float64)
    s = M.strength if strength is None else float(strength)
    p = M.potential(y.size)
    flat = y.reshape(-1)
    gval = g_value(M, y, gamma)
    return -h_value(p, flat) + float(np.dot(h_grad(p, flat), flat)) - s * gval


def phi_along_trajectory(M: ScoreDenoiserModel, y, gamma: float, events=None,
                         strength: float = None) -> float:
    """phi evaluated at x = B(y): s*g(y) - D_h(B(y), y).

    Always <= s*g(y) since the divergence is nonnegative.
    """
    y = np.asarray(y, dtype=np.float64)
    s = M.strength if strength is None else float(strength)
    x = denoise(M, y, gamma, events=events, strength=s)
    p = M.potential(y.size)
    return s * g_value(M, y, gamma) - bregman_div(p, x.reshape(-1), y.reshape(-1))


def convexity_probe(M: ScoreDenoiserModel, y, d, gamma: float,
                    strength: float = None) -> float:
    """Margin of the Burg prox condition at (y, d): RHS - LHS.

    LHS = <hess(s*g)(y) d, d> by a central second difference of s*grad g
    along d (step 1e-4 * ||y||_inf / ||d||_inf); RHS is the closed-form
    diagonal bound. A nonnegative margin means the local condition holds.
    """
    if M.kind is not PotentialKind.BURG:
        raise DomainError("convexity_probe is defined for the Burg geometry")
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if y.shape != d.shape:
        raise ShapeError(f"y and d shapes differ: {y.shape} vs {d.shape}")
    dmax = float(np.max(np.abs(d)))
    if dmax == 0.0:
        raise DomainError("direction d must be nonzero")
    s = M.strength if strength is None else float(strength)
    step = 1e-4 * float(np.max(np.abs(y))) / dmax
    g_plus = g_grad(M, y + step * d, gamma)
    g_minus = g_grad(M, y - step * d, gamma)
    hvp = s * (g_plus - g_minus) / (2.0 * step)
    lhs = float(np.sum(hvp * d))
    sg = s * g_grad(M, y, gamma)
    rhs = float(np.sum((1.0 - 2.0 * y * sg) / (y * y) * d * d))
    return rhs - lhs
