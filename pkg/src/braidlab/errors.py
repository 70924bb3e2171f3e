"""Exception hierarchy shared by all braidlab modules."""


class BraidlabError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(BraidlabError, ValueError):
    """Invalid or inconsistent input parameters."""


class ConvergenceError(BraidlabError):
    """An iteration hit its cap before reaching the requested tolerance.

    The last iterate is kept on ``last`` so callers can inspect it.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class BracketError(BraidlabError):
    """A bisection bracket does not contain a sign change."""


class StructuralError(BraidlabError):
    """A quantity is not defined for the given parameters (e.g. no admissible root)."""


class ResourceError(BraidlabError):
    """A configurable search-space or size cap was exceeded."""


class TruncationError(BraidlabError):
    """A truncated distribution lost more tail mass than allowed.

    ``suggested`` carries a larger truncation point worth retrying with.
    """

    def __init__(self, message, suggested=None):
        super().__init__(message)
        self.suggested = suggested


class NothingResidualError(BraidlabError):
    """The decoder leaves no residual graph (DE fixed point is zero)."""


class SingularPointError(BraidlabError):
    """A parametric curve point is singular (division by a vanishing term)."""
