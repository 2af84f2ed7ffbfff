"""Exception types shared across the package."""


class PainleveLaxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidLatticeError(PainleveLaxError):
    """Period ratio outside the upper half plane (theta series diverges)."""


class DegenerateInputError(PainleveLaxError):
    """Input degenerate beyond repair: zero polynomial, empty matrix, ..."""


class GenericityError(PainleveLaxError):
    """A parameter configuration violates the genericity margins."""


class NotOnCurveError(PainleveLaxError):
    """A point claimed to lie on the base curve does not (within tolerance)."""


class IntersectionSearchError(PainleveLaxError):
    """Fewer curve/curve intersections found than the degrees demand."""


class NoCurveError(PainleveLaxError):
    """An interpolation family came out empty where at least one curve was expected."""


class DegeneracyError(PainleveLaxError):
    """A generically-sound construction hit a measure-zero degenerate case."""


class EliminationError(PainleveLaxError):
    """A divisibility step in the elimination chain failed its residual gate."""


class GenerationError(PainleveLaxError):
    """Random configuration generation could not satisfy the margins."""


class DimensionMismatchWarning(UserWarning):
    """Observed dimension of a curve family differs from the expected count."""
