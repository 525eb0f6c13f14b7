"""Convergent Bregman Plug-and-Play restoration for Poisson inverse problems.

The package provides the Legendre/Bregman geometry (Euclidean and Burg's
entropy), the Poisson data-fit with its circular-convolution operator, the
inverse-gamma multiplicative noise model, a trainable Bregman score
denoiser built on a minimal reverse-mode autodiff engine, the B-RED and
B-PnP solvers with backtracking and convergence diagnostics, and an
experiment harness exposed through the `bpnp` command.
"""

from .errors import (
    BacktrackExhausted,
    BregmanPnPError,
    ConfigError,
    DivergenceInfinity,
    DomainError,
    FormatError,
    KernelSumWarning,
    MirrorDomainError,
    ParameterError,
    RangeViolation,
    RangeWarning,
    ShapeError,
    WellPosednessWarning,
)
from .geometry import (
    BOUNDARY_TOL,
    EPS_IMAGE,
    LegendrePotential,
    PotentialKind,
    bregman_div,
    burg,
    euclidean,
    h_conj_grad,
    h_grad,
    h_value,
    hess_inv_apply,
    in_domain,
    mirror_step,
)
from .poisson import (
    ConvolutionOperator,
    PoissonProblem,
    apply_adjoint,
    apply_forward,
    datafit_grad,
    datafit_value,
    load_kernel_file,
    nolip_bound,
    sample_poisson,
)
from .noise import ig_log_density, noise_moments, sample_ig_noise
from .denoiser import (
    ArchConfig,
    PotentialNetwork,
    ScoreDenoiserModel,
    TrainingConfig,
    convexity_probe,
    denoise,
    g_grad,
    g_value,
    phi_along_trajectory,
    psi_value,
    train,
)
from .solver import (
    SolverConfig,
    SolverTrace,
    backtrack_stepsize,
    bpnp_step,
    bred_step,
    diagnostics,
    run_solver,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # errors
    "BacktrackExhausted", "BregmanPnPError", "ConfigError",
    "DivergenceInfinity", "DomainError", "FormatError", "KernelSumWarning",
    "MirrorDomainError", "ParameterError", "RangeViolation", "RangeWarning",
    "ShapeError", "WellPosednessWarning",
    # geometry
    "BOUNDARY_TOL", "EPS_IMAGE", "LegendrePotential", "PotentialKind",
    "bregman_div", "burg", "euclidean", "h_conj_grad", "h_grad", "h_value",
    "hess_inv_apply", "in_domain", "mirror_step",
    # Poisson model
    "ConvolutionOperator", "PoissonProblem", "apply_adjoint", "apply_forward",
    "datafit_grad", "datafit_value", "load_kernel_file", "nolip_bound",
    "sample_poisson",
    # noise model
    "ig_log_density", "noise_moments", "sample_ig_noise",
    # denoiser
    "ArchConfig", "PotentialNetwork", "ScoreDenoiserModel", "TrainingConfig",
    "convexity_probe", "denoise", "g_grad", "g_value",
    "phi_along_trajectory", "psi_value", "train",
    # solver
    "SolverConfig", "SolverTrace", "backtrack_stepsize", "bpnp_step",
    "bred_step", "diagnostics", "run_solver",
]
