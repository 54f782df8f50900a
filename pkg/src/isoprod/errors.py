"""Exception types raised across the package."""


class IsoprodError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(IsoprodError, ValueError):
    """Array shapes do not match the product space or immersion."""


class ConstraintError(IsoprodError, ValueError):
    """A block violates its space-form constraint."""

    def __init__(self, message, factor=None, residual=None):
        super().__init__(message)
        self.factor = factor
        self.residual = residual


class SheetError(ConstraintError):
    """A hyperbolic block lies on the lower sheet."""


class PreconditionError(IsoprodError, ValueError):
    """An argument fails a documented precondition."""


class WeightError(PreconditionError):
    """Weights of a weighted sum are invalid."""


class SignError(PreconditionError):
    """Curvatures have incompatible signs."""


class DegenerateImmersionError(IsoprodError, ValueError):
    """The induced metric is not positive definite or disagrees with its declaration."""


class FrameError(IsoprodError, ValueError):
    """An orthonormal frame could not be completed."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class FrameContinuationError(FrameError):
    """The normal frame does not vary continuously across a stencil."""


class SpectralGapError(IsoprodError, ValueError):
    """Eigenvalues of a split tensor fall between the clusters at 0 and 1."""


class DimensionJumpError(IsoprodError, ValueError):
    """A subbundle changes dimension across the grid."""


class NotDiagonalSubspaceError(IsoprodError, ValueError):
    """A subspace is not a similarity image in every block."""


class HypothesisError(IsoprodError, ValueError):
    """A structural hypothesis needed by a construction fails."""


class IncompatibleDataError(IsoprodError, ValueError):
    """Reconstruction data fails its compatibility equations."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IntegrabilityError(IsoprodError, ValueError):
    """Path-ordered transport is not path independent."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoMatchError(IsoprodError, ValueError):
    """Two sampled immersions are not related by an admissible isometry."""


class SceneError(IsoprodError, ValueError):
    """A scene or data file is malformed."""
