"""Exception hierarchy shared by all romcert modules."""


class RomcertError(Exception):
    """Base class for errors raised by romcert."""


class DimensionError(RomcertError, ValueError):
    pass


class NonFiniteError(RomcertError, ValueError):
    pass


class UnstableSystemError(RomcertError):
    """A Hurwitz state matrix was required but not supplied."""


class ConvergenceError(RomcertError):
    pass


class CommonEigenvalueError(RomcertError):
    """Sylvester operands share (numerically) an eigenvalue with opposite sign."""


class SingularShiftError(RomcertError):
    pass


class HSVGapError(RomcertError):
    """sigma_n and sigma_{n+1} are not separated, so no a priori bound holds."""

    def __init__(self, n, sigma_n, sigma_next):
        self.n = n
        self.sigma_n = sigma_n
        self.sigma_next = sigma_next
        super().__init__(
            f"sigma_{n} = {sigma_n:.6g} and sigma_{n + 1} = {sigma_next:.6g} "
            f"are not separated; try n = {n - 1} or n = {n + 1}"
        )


class ReductionError(RomcertError):
    pass


class CacheMissError(RomcertError, ValueError):
    """Query outside what an offline artifact was precomputed for."""


class GridError(RomcertError, ValueError):
    pass


class ModelFileError(RomcertError, OSError):
    pass


class RigorAuditError(RomcertError):
    """A measured error exceeded its certified bound."""

    def __init__(self, message, rows=()):
        self.rows = list(rows)
        super().__init__(message)
