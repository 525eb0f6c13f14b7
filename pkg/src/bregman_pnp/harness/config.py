"""Experiment configuration: a flat key=value text format plus CLI overrides.

Every key can appear in the config file and as a CLI flag; flags override
file values.  A resolved config serializes back to sorted key=value lines
in the run manifest, which reproduces the run bit-identically under the
same seed.
"""

import os
from dataclasses import dataclass, fields, replace

from ..denoiser.network import ArchConfig
from ..denoiser.training import TrainingConfig
from ..errors import ConfigError
from ..solver import SolverConfig

__all__ = ["ExperimentConfig", "WARM_LAM_BY_ALPHA", "builtin_deblur_config"]

TASKS = ("train", "denoise", "deblur", "sample-noise")

# Warm-start regularization weight per photon level, shared by both modes.
WARM_LAM_BY_ALPHA = {20.0: 1.5, 40.0: 2.0, 60.0: 2.5}
# Convergent-phase regularization weight per mode.
MAIN_LAM = {"bred": 0.5, "bpnp": 0.025}


def _parse_channels(text):
    if isinstance(text, tuple):
        return text
    try:
        parts = tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"channels must be comma-separated integers, got {text!r}") from exc
    if not parts:
        raise ConfigError("channels must be non-empty")
    return parts


def _parse_float(text):
    try:
        return float(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_int(text):
    try:
        return int(str(text), 10)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


@dataclass
class ExperimentConfig:
    task: str = ""
    image: str = "bundled64"
    dataset: str = "bundled"
    model: str = "bundled"
    out: str = ""
    kernel: str = "uniform9"
    alpha: float = 40.0
    gamma: float = None  # noise / denoiser level; task default when unset
    lam: float = None  # convergent-phase weight; mode default when unset
    mode: str = "bred"
    seed: int = 0
    tau: float = 0.05
    strength: float = 0.05
    box_bound: float = 1.0
    bt_gamma: float = 0.8
    bt_eta: float = 0.5
    bt_cap: int = 60
    rel_tol: float = 1e-8
    max_iter: int = 500
    warm_start: int = 100
    warm_lam: float = None  # alpha-keyed default when unset
    warm_gamma: float = 50.0
    warm_tau: float = 1.0
    warm_strength: float = 1.0
    lam_window: int = 5
    lam_factor: float = 2.0
    lam_max_restarts: int = 6
    epochs: int = 8
    steps_per_epoch: int = 40
    batch_size: int = 8
    patch_size: int = 32
    lr: float = 1e-3
    channels: tuple = (8, 16, 32)
    blocks: int = 1
    net_kernel: int = 3

    @classmethod
    def parsers(cls):
        table = {}
        for f in fields(cls):
            if f.name in ("task", "image", "dataset", "model", "out", "kernel", "mode"):
                table[f.name] = str
            elif f.name == "channels":
                table[f.name] = _parse_channels
            elif f.type in (int, "int"):
                table[f.name] = _parse_int
            else:
                table[f.name] = _parse_float
        return table

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        table = cls.parsers()
        values = {}
        with open(os.fspath(path), "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in table:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = table[key](value)
        return cls(**values)

    def override(self, **kwargs) -> "ExperimentConfig":
        """New config with non-None keyword values replacing current ones."""
        table = self.parsers()
        updates = {}
        for key, value in kwargs.items():
            if value is None:
                continue
            if key not in table:
                raise ConfigError(f"unknown config key {key!r}")
            updates[key] = table[key](value)
        return replace(self, **updates)

    def resolved(self) -> "ExperimentConfig":
        """Fill task/mode-dependent defaults and validate enumerations."""
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.mode not in ("bred", "bpnp"):
            raise ConfigError(f"mode must be 'bred' or 'bpnp', got {self.mode!r}")
        gamma = self.gamma
        if gamma is None:
            gamma = 500.0 if self.task == "deblur" else 25.0
        lam = self.lam if self.lam is not None else MAIN_LAM[self.mode]
        warm_lam = self.warm_lam
        if warm_lam is None:
            warm_lam = WARM_LAM_BY_ALPHA.get(float(self.alpha), 2.0)
        out = self.out or os.path.join("runs", self.task)
        return replace(self, gamma=gamma, lam=lam, warm_lam=warm_lam, out=out)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            mode=self.mode,
            lam=self.lam,
            gamma=self.gamma,
            tau=self.tau,
            strength=self.strength,
            box_bound=self.box_bound,
            bt_gamma=self.bt_gamma,
            bt_eta=self.bt_eta,
            bt_cap=self.bt_cap,
            rel_tol=self.rel_tol,
            max_iter=self.max_iter,
            warm_start=self.warm_start,
            warm_lam=self.warm_lam,
            warm_gamma=self.warm_gamma,
            warm_tau=self.warm_tau,
            warm_strength=self.warm_strength,
            lam_window=self.lam_window,
            lam_factor=self.lam_factor,
            lam_max_restarts=self.lam_max_restarts,
        )

    def training_config(self) -> TrainingConfig:
        arch = ArchConfig(
            channels=self.channels,
            blocks_per_scale=self.blocks,
            kernel_size=self.net_kernel,
        )
        return TrainingConfig(
            arch=arch,
            epochs=self.epochs,
            steps_per_epoch=self.steps_per_epoch,
            batch_size=self.batch_size,
            patch_size=self.patch_size,
            lr=self.lr,
        )

    def manifest_lines(self, extra: dict = None) -> list:
        items = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "channels":
                value = ",".join(str(c) for c in value)
            items[f.name] = value
        for key, value in (extra or {}).items():
            items[str(key)] = value
        def fmt(v):
            return "%.17g" % v if isinstance(v, float) else str(v)
        return [f"{k}={fmt(items[k])}" for k in sorted(items)]


def builtin_deblur_config(alpha: float, mode: str = "bred",
                          kernel: str = "uniform9") -> ExperimentConfig:
    """The stock deblurring configuration for a photon level."""
    if float(alpha) not in WARM_LAM_BY_ALPHA:
        raise ConfigError(
            f"builtin configs cover alpha in {sorted(WARM_LAM_BY_ALPHA)}, got {alpha}"
        )
    return ExperimentConfig(
        task="deblur", alpha=float(alpha), mode=mode, kernel=kernel
    ).resolved()
