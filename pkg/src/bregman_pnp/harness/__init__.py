"""Experiment harness: image/kernel I/O, metrics, configs, CLI."""

from .config import ExperimentConfig, builtin_deblur_config
from .images import ImagePlane, load_image, load_planes, save_image
from .kernels import kernel_array, make_kernel
from .metrics import psnr
from .experiment import asset_path, run_batch, run_experiment

__all__ = [
    "ExperimentConfig",
    "builtin_deblur_config",
    "ImagePlane",
    "load_image",
    "load_planes",
    "save_image",
    "kernel_array",
    "make_kernel",
    "psnr",
    "asset_path",
    "run_batch",
    "run_experiment",
]
