"""Exception hierarchy shared by every module."""


class SkewBlendError(Exception):
    """Base class for all library errors."""


class DomainError(SkewBlendError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class BranchError(SkewBlendError):
    """No root of the requested branch lies in the expected disk."""


class ConvergenceError(SkewBlendError):
    """An iterative solver failed to reach its target."""


class RootSolverError(ConvergenceError):
    """A simultaneous root iteration did not certify every root."""


class DegenerateError(SkewBlendError, ValueError):
    """The parameters sit on a degenerate locus of the requested formula."""


class DivisionError(SkewBlendError, ZeroDivisionError):
    """A fiber coefficient vanished along an inverse-branch composition."""


class CertificationFailure(SkewBlendError):
    """A certified inclusion or inequality was violated.

    ``check`` names the failing test and ``witness`` carries the offending
    disk or point.
    """

    def __init__(self, check, witness=None, message=None):
        self.check = check
        self.witness = witness
        super().__init__(message or f"certification check {check!r} failed at {witness!r}")


class DepthExhausted(SkewBlendError):
    """The greedy nested-image scheme ran out of depth."""


class CoverGap(SkewBlendError):
    """No reference box contains the image graph."""

    def __init__(self, depth, center, radius):
        self.depth = depth
        self.center = center
        self.radius = radius
        super().__init__(f"no H_j contains the disk D({center:.6g}, {radius:.3g}) at depth {depth}")


class BudgetExhausted(SkewBlendError):
    """An iteration budget ran out before a verdict."""


class PreimageError(SkewBlendError):
    """A preimage solve failed in the backward sampler."""


class Inconclusive(SkewBlendError):
    """A height computation ended without verdict."""


class GridError(SkewBlendError, ValueError):
    """A grid or parametrization is degenerate."""


class EmptyInput(SkewBlendError, ValueError):
    """A statistic was requested on an empty set of points."""


class OracleMismatch(SkewBlendError):
    """Main path and independent oracle disagree beyond the stored bound."""


class WordSyntaxError(SkewBlendError, ValueError):
    """A symbol word string could not be parsed."""


class ConfigError(SkewBlendError, ValueError):
    """A job configuration failed validation."""
