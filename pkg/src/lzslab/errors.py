"""Exception and warning types raised across the package."""


class LZSError(Exception):
    """Base class for numerical failures (CLI exit status 1)."""


class NonConvergence(LZSError):
    pass


class DomainError(LZSError, ValueError):
    pass


class DegeneracyError(LZSError):
    """Eigenvalues or biorthogonal norms coalesce; projections are undefined."""


class ExceptionalPointError(DegeneracyError):
    """|m| == |gamma|: the real-gap formulas have a vanishing denominator."""


class DegenerateGap(LZSError):
    pass


class StepUnderflow(LZSError):
    pass


class QuadratureFailure(LZSError):
    pass


class ZeroIntensity(LZSError):
    pass


class ConfigError(Exception):
    """Invalid run configuration (CLI exit status 2)."""


class BoundaryContamination(UserWarning):
    """The beam reached the edge of the waveguide array."""
