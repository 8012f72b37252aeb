"""Exception and warning types shared across the package."""


class TraceLabError(Exception):
    """Base class for all errors raised by tracelab."""


class NotSymmetric(TraceLabError):
    """Matrix expected to be symmetric is not (beyond tolerance)."""


class NotPositiveDefinite(TraceLabError):
    """Cholesky pivot fell below the positivity floor.

    The offending pivot index is stored in ``self.index``.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"pivot {index} is not positive")


class NoConvergence(TraceLabError):
    """Iterative eigensolver hit its sweep limit before reaching tolerance."""


class RankTooLarge(TraceLabError):
    """Requested operator rank exceeds min(domain dim, codomain dim)."""


class NotAPseudoinversePair(TraceLabError):
    """Operator pair fails the four pseudoinverse conditions beyond 1e-8."""


class InvalidSpec(TraceLabError):
    """Malformed domain string or invalid mesh construction parameter."""


class DegenerateTriangle(TraceLabError):
    """Triangle with non-positive or near-zero area encountered."""


class SOutOfRange(TraceLabError):
    """Fractional exponent outside the range supported by the operation."""


class ConfigError(TraceLabError):
    """Invalid command-line or config-file input."""


class NoInteriorVertices(UserWarning):
    """Mesh has no interior vertices; interior solves degrade to zero."""
