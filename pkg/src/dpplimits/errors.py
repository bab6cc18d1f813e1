"""Exception types raised by the package."""


class DPPError(Exception):
    """Base class for model errors."""


class InfeasibleMoments(DPPError, ValueError):
    """A load family cannot realize the requested mean and deviation."""


class DegenerateBaseline(DPPError, ZeroDivisionError):
    """The N:1 baseline loss is zero so no normalized loss exists."""


class UnsupportedFormat(DPPError, ValueError):
    """Requested output format is not available."""
