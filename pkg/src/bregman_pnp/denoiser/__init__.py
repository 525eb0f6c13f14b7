"""Bregman Score Denoiser: engine, network, model operations, training."""

from .model import (
    ScoreDenoiserModel,
    convexity_probe,
    denoise,
    g_grad,
    g_value,
    phi_along_trajectory,
    psi_value,
)
from .network import ArchConfig, PotentialNetwork
from .training import TrainingConfig, train

__all__ = [
    "ScoreDenoiserModel",
    "ArchConfig",
    "PotentialNetwork",
    "TrainingConfig",
    "train",
    "g_value",
    "g_grad",
    "denoise",
    "psi_value",
    "phi_along_trajectory",
    "convexity_probe",
]
