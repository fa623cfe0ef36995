"""Exception hierarchy.

Geometry problems, gate rejections and numerical failures are kept apart
because the CLI maps them to different exit codes, and because a gate
rejection never means "not a diffeomorphism".
"""


class PolydiffError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(PolydiffError):
    pass


class EmptyInterior(GeometryError):
    pass


class Unbounded(GeometryError):
    pass


class NotInPolytope(GeometryError):
    def __init__(self, point, constraint, excess):
        self.point = point
        self.constraint = constraint
        self.excess = excess
        super().__init__(
            f"point {list(point)} violates constraint {constraint} by {excess!r}"
        )


class NotASymmetry(GeometryError):
    pass


class DomainMismatch(GeometryError):
    pass


class GateRejection(PolydiffError):
    """The sufficient gate failed.  This says nothing about the map itself."""


class NotStratified(GateRejection):
    def __init__(self, report):
        self.report = report
        super().__init__(report.summary())


class GateNotSatisfied(GateRejection):
    def __init__(self, q, location=None, message=None):
        self.q = q
        self.location = location
        super().__init__(message or f"sup operator norm bound q={q!r} is not < 1")


class NumericalError(PolydiffError):
    pass


class ProjectionNotConverged(NumericalError):
    pass


class InversionNotConverged(NumericalError):
    pass


class InternalInvariantViolation(NumericalError):
    pass


class CurveNotInM(GeometryError):
    pass


class NoWitnessFound(NumericalError):
    pass
