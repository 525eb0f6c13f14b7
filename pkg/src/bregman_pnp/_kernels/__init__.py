"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension `_core` (Cython) is preferred when importable; the
numpy implementation `_fallback` is byte-compatible and selected otherwise.
Set BREGMAN_PNP_BACKEND=python or =compiled to force a choice (forcing
`compiled` raises if the extension is missing). `BACKEND` names the active
implementation.
"""

import os

from ..errors import ConfigError

_requested = os.environ.get("BREGMAN_PNP_BACKEND", "").strip().lower()

if _requested == "python":
    from . import _fallback as _impl

    BACKEND = "python"
elif _requested in ("", "compiled"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _fallback as _impl

        BACKEND = "python"
else:
    raise ConfigError(
        f"BREGMAN_PNP_BACKEND must be 'python' or 'compiled', got {_requested!r}"
    )

conv2d_forward = _impl.conv2d_forward
conv2d_grad_input = _impl.conv2d_grad_input
conv2d_grad_weight = _impl.conv2d_grad_weight
circ_conv2d = _impl.circ_conv2d
circ_corr2d = _impl.circ_corr2d

__all__ = [
    "BACKEND",
    "conv2d_forward",
    "conv2d_grad_input",
    "conv2d_grad_weight",
    "circ_conv2d",
    "circ_corr2d",
]
