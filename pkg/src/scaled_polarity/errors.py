"""Exception hierarchy for the scaled polarity toolkit.

Every error derives from ScaledPolarityError and from the builtin it refines,
so callers may catch either.
"""


class ScaledPolarityError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(ScaledPolarityError, ValueError):
    """A vector or body does not match the expected dimension."""


class InvalidBodyError(ScaledPolarityError, ValueError):
    """A body descriptor or representation is not a valid convex body."""


class OriginNotInteriorError(InvalidBodyError):
    """The origin is not an interior point of the body."""


class UnboundedBodyError(InvalidBodyError):
    """The body is unbounded (its polar has the origin on the boundary)."""


class UnsupportedShapeError(ScaledPolarityError, NotImplementedError):
    """The requested operation is not available for this shape variant."""


class InvalidProfileError(ScaledPolarityError, ValueError):
    """A profile is not convex, not nondecreasing, or does not vanish at 0."""


class DivergenceError(ScaledPolarityError, ArithmeticError):
    """An integral is zero, infinite or not finite."""


class RootFindingError(ScaledPolarityError, RuntimeError):
    """Bisection failed to bracket or converge."""


class OptimizationStagnationError(ScaledPolarityError, RuntimeError):
    """The maximizer refinement stopped without reaching its tolerance."""

    def __init__(self, message: str, best: tuple[float, float, float] | None = None):
        super().__init__(message)
        self.best = best


class GridTooSmallError(ScaledPolarityError, ValueError):
    """Too much mass of e^{-f} sits on the boundary of the lattice."""


class GridRangeError(ScaledPolarityError, ValueError):
    """A transform output does not fit the lattice, even after extension."""


class BodyMismatchError(ScaledPolarityError, ValueError):
    """Exact radial operations need both functions to share one body."""


class PreconditionError(ScaledPolarityError, ValueError):
    """An input violates a documented precondition (e.g. barycenter at 0)."""


class InequalityViolationError(ScaledPolarityError, AssertionError):
    """A checked inequality failed."""


class CoveringLPError(ScaledPolarityError, RuntimeError):
    """The covering linear program is infeasible or too large."""


class ConfigError(ScaledPolarityError, ValueError):
    """An experiment configuration could not be parsed or validated."""
