"""Pure-numpy kernel implementations (BLAS-backed, no compilation needed).

Same call surface as the compiled core `_core`; selected at import time by
`bregman_pnp._kernels` when the extension is unavailable or when
BREGMAN_PNP_BACKEND=python is set.

Shapes follow the usual NCHW convention: activations are (B, C, H, W) and
filter banks are (O, C, kh, kw); convolutions are stride-1 with symmetric
zero padding `pad`.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "conv2d_forward",
    "conv2d_grad_input",
    "conv2d_grad_weight",
    "circ_conv2d",
    "circ_corr2d",
]


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def conv2d_forward(x: np.ndarray, w: np.ndarray, pad: int) -> np.ndarray:
    """y[b,o,i,j] = sum_{c,u,v} w[o,c,u,v] * x[b,c,i+u-pad,j+v-pad]."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    kh, kw = w.shape[2], w.shape[3]
    xp = _pad(x, pad)
    # windows: (B, C, Ho, Wo, kh, kw); contraction over C, kh, kw hits BLAS.
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(np.moveaxis(y, 3, 1))


def conv2d_grad_input(gy: np.ndarray, w: np.ndarray, pad: int) -> np.ndarray:
    """Adjoint of conv2d_forward in its input argument."""
    w = np.asarray(w, dtype=np.float64)
    kh = w.shape[2]
    # Full correlation = convolution with the flipped, channel-transposed bank.
    wt = np.ascontiguousarray(np.flip(w, axis=(2, 3)).transpose(1, 0, 2, 3))
    return conv2d_forward(gy, wt, kh - 1 - pad)


def conv2d_grad_weight(x: np.ndarray, gy: np.ndarray, pad: int) -> np.ndarray:
    """Adjoint of conv2d_forward in its weight argument."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    ho, wo = gy.shape[2], gy.shape[3]
    xp = _pad(x, pad)
    # windows: (B, C, kh, kw, Ho, Wo)
    win = sliding_window_view(xp, (ho, wo), axis=(2, 3))
    gw = np.tensordot(gy, win, axes=([0, 2, 3], [0, 4, 5]))
    return np.ascontiguousarray(gw)


def circ_conv2d(x: np.ndarray, k: np.ndarray, cr: int, cc: int) -> np.ndarray:
    """y[i,j] = sum_{p,q} k[p,q] * x[(i-p+cr) mod H, (j-q+cc) mod W]."""
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    y = np.zeros_like(x)
    for p in range(k.shape[0]):
        for q in range(k.shape[1]):
            v = k[p, q]
            if v == 0.0:
                continue
            y += v * np.roll(x, (p - cr, q - cc), axis=(0, 1))
    return y


def circ_corr2d(x: np.ndarray, k: np.ndarray, cr: int, cc: int) -> np.ndarray:
    """Adjoint of circ_conv2d: y[i,j] = sum k[p,q] * x[(i+p-cr) mod H, ...]."""
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    y = np.zeros_like(x)
    for p in range(k.shape[0]):
        for q in range(k.shape[1]):
            v = k[p, q]
            if v == 0.0:
                continue
            y += v * np.roll(x, (cr - p, cc - q), axis=(0, 1))
    return y
