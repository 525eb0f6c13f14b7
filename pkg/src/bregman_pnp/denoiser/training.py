"""Training loop for the Bregman Score Denoiser.

The loss is the expected squared restoration error E||B_gamma(y) - x||^2
over random patches x, inverse-gamma noise y at level gamma with 1/gamma
drawn uniformly from the training range, and

    B_gamma(y) = y - y^2 * grad_y g(y)        (Burg geometry)

so every optimization step differentiates through the input-gradient of the
learned potential: the engine's gradients are built with create_graph=True
and differentiated once more with respect to the weights.

Optimization is plain Adam with the learning rate halved at 25/50/75% of
the epoch budget.  Everything is driven by one explicit seed.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..geometry import EPS_IMAGE, PotentialKind
from . import autodiff as ad
from .model import ScoreDenoiserModel
from .network import ArchConfig, PotentialNetwork

__all__ = ["TrainingConfig", "train"]


@dataclass(frozen=True)
class TrainingConfig:
    arch: ArchConfig = ArchConfig()
    epochs: int = 20
    steps_per_epoch: int = 100
    batch_size: int = 8
    patch_size: int = 32
    lr: float = 1e-4
    lr_milestones: tuple = (0.25, 0.5, 0.75)
    inv_gamma_range: tuple = (0.0, 0.1)
    kind: PotentialKind = PotentialKind.BURG
    strength: float = 1.0

    def validate(self) -> None:
        if self.epochs < 1 or self.steps_per_epoch < 1 or self.batch_size < 1:
            raise ConfigError("epochs, steps_per_epoch and batch_size must be >= 1")
        if self.patch_size < 1:
            raise ConfigError("patch_size must be >= 1")
        factor = 2 ** (self.arch.scales - 1)
        if self.patch_size % factor:
            raise ConfigError(
                f"patch_size {self.patch_size} not divisible by {factor} "
                f"({self.arch.scales} scales)"
            )
        lo, hi = self.inv_gamma_range
        if not (0.0 <= lo < hi):
            raise ConfigError(f"invalid inv_gamma_range ({lo}, {hi})")
        if self.lr <= 0.0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not (0.0 < self.strength <= 1.0):
            raise ConfigError(f"strength must lie in (0, 1], got {self.strength}")


def _check_dataset(dataset, patch: int):
    images = []
    for idx, img in enumerate(dataset):
        img = np.asarray(img, dtype=np.float64)
        if img.ndim != 2:
            raise ConfigError(f"dataset image {idx} is not 2-D (shape {img.shape})")
        if img.shape[0] < patch or img.shape[1] < patch:
            raise ConfigError(
                f"dataset image {idx} is {img.shape[0]}x{img.shape[1]}, "
                f"smaller than the {patch}x{patch} patch"
            )
        if img.min() < EPS_IMAGE - 1e-12 or img.max() > 1.0 + 1e-12:
            raise ConfigError(
                f"dataset image {idx} has values in [{img.min():g}, {img.max():g}], "
                f"expected [{EPS_IMAGE}, 1]"
            )
        images.append(img)
    if not images:
        raise ConfigError("dataset is empty")
    return images


def _sample_batch(images, rng, batch: int, patch: int):
    x = np.empty((batch, 1, patch, patch))
    for b in range(batch):
        img = images[rng.integers(len(images))]
        top = rng.integers(img.shape[0] - patch + 1)
        left = rng.integers(img.shape[1] - patch + 1)
        x[b, 0] = img[top : top + patch, left : left + patch]
    return x


def train(dataset, config: TrainingConfig, seed: int):
    """Train a denoiser; returns (model, log) with the per-epoch loss curve.

    Deterministic given the seed: initialization, patch selection, noise
    levels and noise draws all come from one PCG64 stream.
    """
    config.validate()
    images = _check_dataset(dataset, config.patch_size)
    rng = np.random.Generator(np.random.PCG64(seed))
    network = PotentialNetwork.initialize(config.arch, seed=int(rng.integers(2**62)))
    names = [name for name, _ in network.specs]
    lo, hi = config.inv_gamma_range

    # Adam state over the flat weight vector.
    flat = network.weights
    m = np.zeros_like(flat)
    v = np.zeros_like(flat)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0

    milestones = {max(1, int(frac * config.epochs)) for frac in config.lr_milestones}
    lr = config.lr
    loss_curve = []
    for epoch in range(config.epochs):
        if epoch in milestones:
            lr *= 0.5
        epoch_losses = []
        for _ in range(config.steps_per_epoch):
            x = _sample_batch(images, rng, config.batch_size, config.patch_size)
            inv_gamma = np.maximum(rng.uniform(lo, hi, size=config.batch_size), 1e-9)
            gamma = 1.0 / inv_gamma
            shape_param = (gamma - 1.0).reshape(-1, 1, 1, 1)
            rate = gamma.reshape(-1, 1, 1, 1) * x
            y = 1.0 / rng.gamma(shape=shape_param, scale=1.0 / rate)

            params = {name: ad.Tensor(arr, requires_grad=True)
                      for name, arr in network.unpack().items()}
            y_t = ad.parameter(y)
            n_t = network.forward(y_t, inv_gamma, params)
            d = ad.sub(y_t, n_t)
            g_t = ad.scale(ad.reduce_sum(ad.mul(d, d)), 0.5)
            (gy,) = ad.grad(g_t, [y_t], create_graph=True)
            if config.kind is PotentialKind.BURG:
                b_t = ad.sub(y_t, ad.mul(ad.mul(y_t, y_t), gy))
            else:
                b_t = ad.sub(y_t, gy)
            r = ad.sub(b_t, ad.constant(x))
            loss = ad.scale(ad.reduce_sum(ad.mul(r, r)), 1.0 / config.batch_size)
            grads = ad.grad(loss, [params[name] for name in names])
            gvec = np.concatenate([g.data.reshape(-1) for g in grads])

            t += 1
            m = beta1 * m + (1.0 - beta1) * gvec
            v = beta2 * v + (1.0 - beta2) * gvec * gvec
            mhat = m / (1.0 - beta1**t)
            vhat = v / (1.0 - beta2**t)
            flat -= lr * mhat / (np.sqrt(vhat) + eps)
            epoch_losses.append(loss.item())
        loss_curve.append(float(np.mean(epoch_losses)))

    log = {"loss_curve": loss_curve, "final_lr": lr, "steps": t}
    metadata = {
        "seed": int(seed),
        "inv_gamma_range": [lo, hi],
        "loss_curve": loss_curve,
        "epochs": config.epochs,
        "steps_per_epoch": config.steps_per_epoch,
        "batch_size": config.batch_size,
        "patch_size": config.patch_size,
        "lr": config.lr,
    }
    model = ScoreDenoiserModel(
        network,
        kind=config.kind,
        strength=config.strength,
        inv_gamma_range=(lo, hi),
        metadata=metadata,
    )
    return model, log
