"""Minimal reverse-mode differentiation engine over a fixed operator set.

This is not a general autodiff system: exactly the operators needed by the
potential network are provided (elementwise arithmetic, softplus/sigmoid,
zero-padded convolution and its two adjoints, 2x average pooling / nearest
upsampling, channel concat/slice/pad, bias broadcasting, full reduction).
Every vector-Jacobian product is itself built from these operators, so the
set is closed under differentiation: gradients produced with
``grad(..., create_graph=True)`` are differentiable again.  That second
level is what training needs, because the denoiser applies the gradient of
the learned potential to its own input.

All data is float64 numpy; evaluation order is fixed, so results are
deterministic.
"""

from contextlib import contextmanager

import numpy as np

from .. import _kernels
from ..errors import ShapeError

__all__ = [
    "Tensor",
    "constant",
    "parameter",
    "no_grad",
    "grad",
    "add",
    "sub",
    "neg",
    "mul",
    "scale",
    "softplus",
    "sigmoid",
    "conv2d",
    "conv2d_input_grad",
    "conv2d_weight_grad",
    "reduce_sum",
    "expand",
    "bias_expand",
    "sum_bhw",
    "avgpool2",
    "upsample2",
    "concat_channels",
    "slice_channels",
    "channel_pad",
]

_grad_enabled = [True]


@contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    _grad_enabled.append(False)
    try:
        yield
    finally:
        _grad_enabled.pop()


class _Node:
    __slots__ = ("inputs", "vjp")

    def __init__(self, inputs, vjp):
        self.inputs = inputs
        self.vjp = vjp


class Tensor:
    """A float64 array with an optional creator record for backprop."""

    __slots__ = ("data", "requires_grad", "node")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _make(data, inputs, vjp) -> Tensor:
    out = Tensor(data)
    if _grad_enabled[-1] and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = _Node(tuple(inputs), vjp)
    return out


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    return _make(a.data - b.data, (a, b), lambda g: (g, neg(g)))


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (neg(g),))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    return _make(a.data * b.data, (a, b), lambda g: (mul(g, b), mul(g, a)))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make(c * a.data, (a,), lambda g: (scale(g, c),))


# ---------------------------------------------------------------------------
# activations (C^2 everywhere, as the Hessian probe requires)
# ---------------------------------------------------------------------------

def _sigmoid_data(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(a: Tensor) -> Tensor:
    def vjp(g):
        return (mul(g, sigmoid(a)),)

    return _make(np.logaddexp(0.0, a.data), (a,), vjp)


def sigmoid(a: Tensor) -> Tensor:
    s_data = _sigmoid_data(a.data)

    def vjp(g):
        s = sigmoid(a)
        return (mul(g, sub(s, mul(s, s))),)

    return _make(s_data, (a,), vjp)


# ---------------------------------------------------------------------------
# convolution triple: forward and both adjoints, mutually closed under VJP
# ---------------------------------------------------------------------------

def _check4d(t: Tensor, op: str, name: str) -> None:
    if t.data.ndim != 4:
        raise ShapeError(f"{op}: {name} must be 4-D (B,C,H,W), got {t.data.shape}")


def conv2d(x: Tensor, w: Tensor, pad: int) -> Tensor:
    """Stride-1 zero-padded convolution of (B,C,H,W) with (O,C,kh,kw)."""
    _check4d(x, "conv2d", "x")
    _check4d(w, "conv2d", "w")
    if x.data.shape[1] != w.data.shape[1]:
        raise ShapeError(
            f"conv2d: input has {x.data.shape[1]} channels, bank expects {w.data.shape[1]}"
        )

    def vjp(g):
        return (conv2d_input_grad(g, w, pad), conv2d_weight_grad(x, g, pad))

    return _make(_kernels.conv2d_forward(x.data, w.data, pad), (x, w), vjp)


def conv2d_input_grad(gy: Tensor, w: Tensor, pad: int) -> Tensor:
    """Adjoint of conv2d in its input; bilinear in (gy, w)."""
    _check4d(gy, "conv2d_input_grad", "gy")
    _check4d(w, "conv2d_input_grad", "w")

    def vjp(g):
        return (conv2d(g, w, pad), conv2d_weight_grad(g, gy, pad))

    return _make(_kernels.conv2d_grad_input(gy.data, w.data, pad), (gy, w), vjp)


def conv2d_weight_grad(x: Tensor, gy: Tensor, pad: int) -> Tensor:
    """Adjoint of conv2d in its weights; bilinear in (x, gy)."""
    _check4d(x, "conv2d_weight_grad", "x")
    _check4d(gy, "conv2d_weight_grad", "gy")

    def vjp(g):
        return (conv2d_input_grad(gy, g, pad), conv2d(x, g, pad))

    return _make(_kernels.conv2d_grad_weight(x.data, gy.data, pad), (x, gy), vjp)


# ---------------------------------------------------------------------------
# reductions and broadcasts
# ---------------------------------------------------------------------------

def reduce_sum(a: Tensor) -> Tensor:
    shape = a.data.shape

    def vjp(g):
        return (expand(g, shape),)

    return _make(np.sum(a.data), (a,), vjp)


def expand(a: Tensor, shape) -> Tensor:
    """Broadcast a scalar tensor to `shape` (adjoint of reduce_sum)."""
    if a.data.size != 1:
        raise ShapeError(f"expand: source must be scalar, got shape {a.data.shape}")

    def vjp(g):
        return (reduce_sum(g),)

    return _make(np.full(shape, float(a.data)), (a,), vjp)


def bias_expand(b: Tensor, batch: int, height: int, width: int) -> Tensor:
    """Broadcast a (C,) bias to (B,C,H,W) (adjoint of sum_bhw)."""
    if b.data.ndim != 1:
        raise ShapeError(f"bias_expand: bias must be 1-D, got {b.data.shape}")
    data = np.broadcast_to(
        b.data.reshape(1, -1, 1, 1), (batch, b.data.shape[0], height, width)
    ).copy()

    def vjp(g):
        return (sum_bhw(g),)

    return _make(data, (b,), vjp)


def sum_bhw(a: Tensor) -> Tensor:
    """Reduce (B,C,H,W) over batch and space to (C,) (adjoint of bias_expand)."""
    _check4d(a, "sum_bhw", "a")
    batch, _, height, width = a.data.shape

    def vjp(g):
        return (bias_expand(g, batch, height, width),)

    return _make(np.sum(a.data, axis=(0, 2, 3)), (a,), vjp)


# ---------------------------------------------------------------------------
# resolution changes (linear, mutually adjoint up to the 1/4 factor)
# ---------------------------------------------------------------------------

def avgpool2(a: Tensor) -> Tensor:
    _check4d(a, "avgpool2", "a")
    batch, ch, height, width = a.data.shape
    if height % 2 or width % 2:
        raise ShapeError(f"avgpool2: spatial dims must be even, got {height}x{width}")
    data = a.data.reshape(batch, ch, height // 2, 2, width // 2, 2).mean(axis=(3, 5))

    def vjp(g):
        return (scale(upsample2(g), 0.25),)

    return _make(data, (a,), vjp)


def upsample2(a: Tensor) -> Tensor:
    _check4d(a, "upsample2", "a")
    data = np.repeat(np.repeat(a.data, 2, axis=2), 2, axis=3)

    def vjp(g):
        return (scale(avgpool2(g), 4.0),)

    return _make(data, (a,), vjp)


# ---------------------------------------------------------------------------
# channel plumbing
# ---------------------------------------------------------------------------

def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    _check4d(a, "concat_channels", "a")
    _check4d(b, "concat_channels", "b")
    ca = a.data.shape[1]
    cb = b.data.shape[1]

    def vjp(g):
        return (slice_channels(g, 0, ca), slice_channels(g, ca, ca + cb))

    return _make(np.concatenate([a.data, b.data], axis=1), (a, b), vjp)


def slice_channels(a: Tensor, lo: int, hi: int) -> Tensor:
    _check4d(a, "slice_channels", "a")
    total = a.data.shape[1]
    if not (0 <= lo < hi <= total):
        raise ShapeError(f"slice_channels: [{lo}:{hi}] out of range for {total} channels")

    def vjp(g):
        return (channel_pad(g, lo, total),)

    return _make(np.ascontiguousarray(a.data[:, lo:hi]), (a,), vjp)


def channel_pad(a: Tensor, lo: int, total: int) -> Tensor:
    """Embed channels [lo:lo+C] into `total` channels of zeros."""
    _check4d(a, "channel_pad", "a")
    batch, ch, height, width = a.data.shape
    if lo < 0 or lo + ch > total:
        raise ShapeError(f"channel_pad: [{lo}:{lo + ch}] out of range for {total}")
    data = np.zeros((batch, total, height, width))
    data[:, lo : lo + ch] = a.data

    def vjp(g):
        return (slice_channels(g, lo, lo + ch),)

    return _make(data, (a,), vjp)


# ---------------------------------------------------------------------------
# backpropagation
# ---------------------------------------------------------------------------

def grad(output: Tensor, inputs, create_graph: bool = False):
    """Gradients of a scalar `output` w.r.t. each tensor in `inputs`.

    With create_graph=True the returned gradients carry their own graph and
    can be differentiated again.  Inputs that the output does not depend on
    get a zero gradient.
    """
    if output.data.size != 1:
        raise ShapeError(f"grad: output must be scalar, got shape {output.data.shape}")
    inputs = list(inputs)

    # Postorder over the recorded graph: leaves first, output last.
    order = []
    seen = set()
    stack = [(output, False)]
    while stack:
        t, processed = stack.pop()
        if processed:
            order.append(t)
            continue
        if id(t) in seen or t.node is None or not t.requires_grad:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for inp in t.node.inputs:
            stack.append((inp, False))

    grads = {id(output): constant(np.ones_like(output.data))}

    def run():
        for t in reversed(order):
            g = grads.get(id(t))
            if g is None:
                continue
            parts = t.node.vjp(g)
            for inp, part in zip(t.node.inputs, parts):
                if part is None or not inp.requires_grad:
                    continue
                prev = grads.get(id(inp))
                grads[id(inp)] = part if prev is None else add(prev, part)

    if create_graph:
        run()
    else:
        with no_grad():
            run()

    out = []
    for inp in inputs:
        g = grads.get(id(inp))
        out.append(g if g is not None else constant(np.zeros_like(inp.data)))
    return out
