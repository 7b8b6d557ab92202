"""Exception hierarchy shared by every tsylv module."""


class TensorError(Exception):
    """Base class for all errors raised by tsylv."""


class DimensionMismatch(TensorError, ValueError):
    pass


class DimensionTooSmall(TensorError, ValueError):
    pass


class SymmetryViolation(TensorError):
    """Spectral data flagged as coming from a real tensor is not conjugate symmetric."""


class SingularTube(TensorError, ArithmeticError):
    """A tube has a (numerically) vanishing Fourier coefficient.

    ``column`` is set when the failure happens inside a Tubal-QR sweep and
    names the offending lateral slice (0-based).
    """

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class SingularPencil(TensorError, ArithmeticError):
    """The two Sylvester coefficients share (numerically) an eigenvalue in some slice."""

    def __init__(self, message, slice_index=None):
        super().__init__(message)
        self.slice_index = slice_index


class ConvergenceFailure(TensorError, ArithmeticError):
    def __init__(self, message, slice_index=None):
        super().__init__(message)
        self.slice_index = slice_index


class ZeroSeed(TensorError, ValueError):
    pass


class SingularProjection(TensorError, ArithmeticError):
    """The square Hessenberg matrix of a FOM cycle is singular."""


class BlockBreakdown(TensorError, ArithmeticError):
    """Tubal block Arnoldi hit a rank-deficient block.

    Attributes
    ----------
    step : int
        1-based index of the block that could not be formed.
    state : BlockArnoldiState or None
        State truncated at the last complete step (``None`` when the seed
        itself is deficient).
    remainder : ndarray or None
        The orthogonalized but un-normalized block that broke down.
    """

    def __init__(self, message, step, state=None, remainder=None):
        super().__init__(message)
        self.step = step
        self.state = state
        self.remainder = remainder


class MaxRestartsExceeded(TensorError):
    """Restart budget exhausted; ``x`` holds the last iterate, ``report`` the history."""

    def __init__(self, message, x=None, report=None):
        super().__init__(message)
        self.x = x
        self.report = report


class TT3DError(TensorError, OSError):
    pass


class BadMagic(TT3DError):
    pass


class BadVersion(TT3DError):
    pass


class TruncatedFile(TT3DError):
    pass


class NonFiniteValue(TT3DError, ValueError):
    pass
