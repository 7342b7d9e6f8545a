"""Exception hierarchy.

Every failure raised by the library derives from :class:`TspsError`, so
callers (and the CLI) can catch one type and still dispatch on the subclass.
"""


class TspsError(Exception):
    """Base class for all library errors."""


class InputError(TspsError, ValueError):
    """Caller supplied data that violates an operation's preconditions."""


class GeometryError(TspsError, ArithmeticError):
    """A geometric construction hit a degenerate configuration."""


# geometry primitives
class DegenerateInput(GeometryError):
    pass


class ParallelPlanes(GeometryError):
    pass


class TangentDegenerate(GeometryError):
    pass


class OffSphere(InputError):
    pass


# time scales
class NotInScale(InputError):
    pass


class BoundaryPoint(InputError):
    pass


class BoundaryIndex(InputError, IndexError):
    pass


class NoConvergence(TspsError):
    pass


# smooth forms
class DegenerateFirstForm(GeometryError):
    pass


class DegenerateChebyshevAngle(GeometryError):
    pass


class NotChebyshev(InputError):
    pass


# discrete and time-scale surfaces
class DegenerateTangents(GeometryError):
    pass


class DegenerateTetrahedron(GeometryError):
    pass


class TooSmall(InputError):
    pass


class InvalidCauchyData(InputError):
    pass


class ConsistencyViolation(GeometryError):
    """Raised while propagating a net when a new vertex misses its second edge length.

    ``index`` carries the (m, n) of the quad being completed, when known.
    """

    def __init__(self, message, index=None, residual=None):
        super().__init__(message)
        self.index = index
        self.residual = residual


class NotChebyshevNet(InputError):
    pass


# generators
class OutOfValidityBand(InputError):
    pass


class SingularParametrization(InputError):
    pass


class BadAngle(InputError):
    pass


class FormatError(InputError):
    """Unreadable, malformed or unknown-version file content."""
