"""Exception hierarchy shared by all ringbethe modules."""


class RingBetheError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(RingBetheError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class OutOfRangeError(InvalidParameterError):
    """A closed-form root falls outside the positive momentum quadrant."""


class ConfigurationError(RingBetheError, ValueError):
    """Two objects that must share a configuration do not."""


class DomainError(RingBetheError, ValueError):
    """Coordinates outside the ring interval [0, L)."""


class ConvergenceError(RingBetheError):
    """Newton iteration did not reach the residual tolerance.

    Attributes
    ----------
    k1, k2 : float
        Last iterate.
    residual : float
        Max-norm residual at the last iterate.
    """

    def __init__(self, message, k1=float("nan"), k2=float("nan"), residual=float("nan")):
        super().__init__(message)
        self.k1 = k1
        self.k2 = k2
        self.residual = residual


class SingularStepError(ConvergenceError):
    """The Jacobian is numerically singular at the current iterate."""


class EnumerationError(RingBetheError):
    """Continuation from the free limit lost a state."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class PathError(RingBetheError):
    """Root tracking along an alpha grid failed."""

    def __init__(self, message, alpha=float("nan")):
        super().__init__(message)
        self.alpha = alpha


class DegenerateMomentaError(RingBetheError, ValueError):
    """Coincident momenta make the contact scattering factor meaningless."""


class NotASpectralRootError(RingBetheError):
    """The boundary-condition system has no nullspace at the given momenta."""

    def __init__(self, message, consistency_residual=float("nan")):
        super().__init__(message)
        self.consistency_residual = consistency_residual


class OracleUnreliableError(RingBetheError):
    """Quadrature did not converge under order doubling."""


class PathTooCoarseError(RingBetheError):
    """Neighbouring states along a contour are nearly orthogonal."""


class IllDefinedPhaseError(RingBetheError):
    """The endpoint overlap is too small for its argument to be meaningful."""

    def __init__(self, message, magnitude=float("nan"), partial=None):
        super().__init__(message)
        self.magnitude = magnitude
        # PhaseResult with the computable terms filled in and theta_g = nan
        self.partial = partial
