"""Error taxonomy shared by all modules.

Every failure the library can signal is a subclass of :class:`BregmanPnPError`
so callers (and the CLI exit-code mapping) can distinguish configuration
problems, numeric/domain problems, and I/O problems with a single except
clause per family.
"""

__all__ = [
    "BregmanPnPError",
    "DomainError",
    "DivergenceInfinity",
    "MirrorDomainError",
    "ShapeError",
    "ParameterError",
    "ConfigError",
    "FormatError",
    "BacktrackExhausted",
    "RangeWarning",
    "KernelSumWarning",
    "WellPosednessWarning",
    "RangeViolation",
]


class BregmanPnPError(Exception):
    """Base class for all library errors."""


class DomainError(BregmanPnPError):
    """An argument lies outside the domain required by the operation."""


class DivergenceInfinity(DomainError):
    """Bregman divergence is +infinity: the first argument left dom(h).

    Raised instead of returning float('inf') so solver code must handle the
    infinite-divergence case explicitly.
    """


class MirrorDomainError(DomainError):
    """The mirror step left the domain of the conjugate gradient.

    For Burg's entropy this means some coordinate of 1 + tau*x*u is <= 0;
    the step x -> grad h*(grad h(x) - tau*u) is then undefined.
    """


class ShapeError(BregmanPnPError):
    """Array shapes do not match the operation's contract."""


class ParameterError(BregmanPnPError):
    """A distribution or solver parameter is outside its admissible range."""


class ConfigError(BregmanPnPError):
    """An experiment or training configuration is invalid."""


class FormatError(BregmanPnPError):
    """A kernel, image, or model file does not parse."""


class BacktrackExhausted(BregmanPnPError):
    """Backtracking shrank the stepsize past the trial cap without acceptance.

    Signals a modeling violation (the sufficient-decrease condition never
    held); surfaced in the solver trace rather than silently swallowed.
    """


class RangeWarning(UserWarning):
    """A denoiser is evaluated outside its trained noise-level range."""


class KernelSumWarning(UserWarning):
    """A kernel file's entries deviated from unit sum and were re-normalized."""


class WellPosednessWarning(UserWarning):
    """A sufficient condition for well-posed iterations is violated.

    Emitted (not raised) because the condition is conservative and runs may
    still succeed.
    """


class RangeViolation:
    """Event record: a denoiser output left the interior of dom(h).

    The output was clamped back to [eps, 1]; instances carry enough context
    to be surfaced in solver traces.
    """

    __slots__ = ("count", "min_value", "context")

    def __init__(self, count: int, min_value: float, context: str = ""):
        self.count = int(count)
        self.min_value = float(min_value)
        self.context = context

    def __repr__(self):
        return (
            f"RangeViolation(count={self.count}, "
            f"min_value={self.min_value!r}, context={self.context!r})"
        )
