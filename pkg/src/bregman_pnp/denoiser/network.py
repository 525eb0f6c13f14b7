"""The potential network N_gamma and its serialized container.

A small encoder-decoder CNN with softplus activations (C^2 everywhere, so
the learned potential is twice differentiable), one residual block per
scale, average-pool downsampling, nearest-neighbor upsampling, and additive
encoder-decoder skips.  The noise level enters as an extra input channel
with constant value 1/gamma.  The final convolution starts at zero and the
network output is y + residual, so a freshly initialized network is exactly
the identity and the induced potential g(y) = 0.5*||y - N(y)||^2 is
identically zero.

Weights live in one flat float64 vector with a fixed packing order derived
from the architecture descriptor; the on-disk container is a versioned npz
archive holding the descriptor, the weight vector, and training metadata.
"""

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, FormatError, ShapeError
from . import autodiff as ad

__all__ = [
    "ArchConfig",
    "PotentialNetwork",
    "MODEL_FORMAT",
]

MODEL_FORMAT = "bregman-pnp-model-1"


@dataclass(frozen=True)
class ArchConfig:
    """Architecture descriptor: one channel width per scale."""

    channels: tuple = (16, 32, 64)
    blocks_per_scale: int = 1
    kernel_size: int = 3

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if len(self.channels) < 1 or any(c < 1 for c in self.channels):
            raise ConfigError(f"channels must be positive, got {self.channels}")
        if self.blocks_per_scale < 1:
            raise ConfigError("blocks_per_scale must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")

    @property
    def scales(self) -> int:
        return len(self.channels)

    @property
    def pad(self) -> int:
        return self.kernel_size // 2

    def param_specs(self):
        """Ordered (name, shape) pairs defining the flat weight layout."""
        k = self.kernel_size
        ch = self.channels
        specs = [("head.w", (ch[0], 2, k, k)), ("head.b", (ch[0],))]

        def block(prefix, c):
            for tag in ("c1", "c2"):
                specs.append((f"{prefix}.{tag}.w", (c, c, k, k)))
                specs.append((f"{prefix}.{tag}.b", (c,)))

        for s, c in enumerate(ch):
            for b in range(self.blocks_per_scale):
                block(f"enc{s}.{b}", c)
            if s + 1 < len(ch):
                specs.append((f"down{s}.w", (ch[s + 1], c, k, k)))
                specs.append((f"down{s}.b", (ch[s + 1],)))
        for s in reversed(range(len(ch) - 1)):
            specs.append((f"up{s}.w", (ch[s], ch[s + 1], k, k)))
            specs.append((f"up{s}.b", (ch[s],)))
            for b in range(self.blocks_per_scale):
                block(f"dec{s}.{b}", ch[s])
        specs.append(("tail.w", (1, ch[0], k, k)))
        specs.append(("tail.b", (1,)))
        return specs

    def to_json(self) -> str:
        return json.dumps(
            {
                "channels": list(self.channels),
                "blocks_per_scale": self.blocks_per_scale,
                "kernel_size": self.kernel_size,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "ArchConfig":
        try:
            d = json.loads(text)
            return ArchConfig(
                channels=tuple(d["channels"]),
                blocks_per_scale=int(d["blocks_per_scale"]),
                kernel_size=int(d["kernel_size"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed architecture descriptor: {exc}") from exc


class PotentialNetwork:
    """Flat weight vector + architecture; forward pass builds engine tensors."""

    def __init__(self, arch: ArchConfig, weights: np.ndarray):
        self.arch = arch
        self.specs = arch.param_specs()
        self.sizes = [int(np.prod(shape)) for _, shape in self.specs]
        total = sum(self.sizes)
        weights = np.ascontiguousarray(weights, dtype=np.float64).reshape(-1)
        if weights.size != total:
            raise ShapeError(
                f"weight vector has {weights.size} entries, architecture needs {total}"
            )
        self.weights = weights

    @property
    def num_params(self) -> int:
        return self.weights.size

    @classmethod
    def initialize(cls, arch: ArchConfig, seed: int) -> "PotentialNetwork":
        """He-style init for interior convolutions; zero tail and biases."""
        rng = np.random.Generator(np.random.PCG64(seed))
        chunks = []
        for name, shape in arch.param_specs():
            if name.endswith(".b") or name == "tail.w":
                chunks.append(np.zeros(int(np.prod(shape))))
            else:
                fan_in = int(np.prod(shape[1:]))
                std = np.sqrt(2.0 / fan_in)
                chunks.append(std * rng.standard_normal(int(np.prod(shape))))
        return cls(arch, np.concatenate(chunks))

    def unpack(self, flat: np.ndarray | None = None):
        """Split a flat vector into named parameter arrays (views)."""
        flat = self.weights if flat is None else flat
        out = {}
        off = 0
        for (name, shape), size in zip(self.specs, self.sizes):
            out[name] = flat[off : off + size].reshape(shape)
            off += size
        return out

    def pack(self, params: dict) -> np.ndarray:
        return np.concatenate([params[name].reshape(-1) for name, _ in self.specs])

    def forward(self, y: "ad.Tensor", inv_gamma, params: dict) -> "ad.Tensor":
        """N(y) for y of shape (B,1,H,W); params maps names to Tensors.

        inv_gamma is a scalar or a length-B array filling the conditioning
        channel. H and W must be divisible by 2^(scales-1).
        """
        batch, cin, height, width = y.shape
        if cin != 1:
            raise ShapeError(f"network input must have 1 channel, got {cin}")
        factor = 2 ** (self.arch.scales - 1)
        if height % factor or width % factor:
            raise ShapeError(
                f"input {height}x{width} not divisible by {factor} "
                f"(network has {self.arch.scales} scales)"
            )
        pad = self.arch.pad
        cond = np.empty((batch, 1, height, width))
        cond[:] = np.reshape(np.asarray(inv_gamma, dtype=np.float64), (-1, 1, 1, 1))

        def conv(t, name):
            w = params[f"{name}.w"]
            b = params[f"{name}.b"]
            out = ad.conv2d(t, w, pad)
            bsh = out.shape
            return ad.add(out, ad.bias_expand(b, bsh[0], bsh[2], bsh[3]))

        def resblock(t, prefix):
            h1 = ad.softplus(conv(t, f"{prefix}.c1"))
            return ad.add(t, conv(h1, f"{prefix}.c2"))

        t = conv(ad.concat_channels(y, ad.constant(cond)), "head")
        skips = []
        for s in range(self.arch.scales):
            for b in range(self.arch.blocks_per_scale):
                t = resblock(t, f"enc{s}.{b}")
            if s + 1 < self.arch.scales:
                skips.append(t)
                t = ad.avgpool2(conv(t, f"down{s}"))
        for s in reversed(range(self.arch.scales - 1)):
            t = conv(ad.upsample2(t), f"up{s}")
            t = ad.add(t, skips[s])
            for b in range(self.arch.blocks_per_scale):
                t = resblock(t, f"dec{s}.{b}")
        residual = conv(t, "tail")
        return ad.add(y, residual)

    def param_tensors(self, requires_grad: bool = False):
        """Wrap the current weights as engine tensors."""
        return {
            name: ad.Tensor(arr, requires_grad=requires_grad)
            for name, arr in self.unpack().items()
        }


def save_model(path, network: PotentialNetwork, geometry_kind: str,
               strength: float, metadata: dict) -> None:
    """Write the versioned model container (npz)."""
    meta = dict(metadata)
    meta["format"] = MODEL_FORMAT
    meta["arch"] = json.loads(network.arch.to_json())
    meta["geometry"] = geometry_kind
    meta["strength"] = float(strength)
    np.savez(
        path,
        format=np.array(MODEL_FORMAT),
        meta=np.array(json.dumps(meta, sort_keys=True)),
        weights=network.weights,
    )


def load_model(path):
    """Read a model container; returns (network, geometry_kind, strength, meta)."""
    try:
        with np.load(path, allow_pickle=False) as archive:
            fmt = str(archive["format"])
            if fmt != MODEL_FORMAT:
                raise FormatError(f"unsupported model format {fmt!r} in {path}")
            meta = json.loads(str(archive["meta"]))
            weights = np.asarray(archive["weights"], dtype=np.float64)
    except OSError as exc:
        raise FormatError(f"cannot read model file {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed model file {path}: {exc}") from exc
    arch = ArchConfig.from_json(json.dumps(meta["arch"]))
    network = PotentialNetwork(arch, weights)
    return network, meta.get("geometry", "burg"), float(meta.get("strength", 1.0)), meta
