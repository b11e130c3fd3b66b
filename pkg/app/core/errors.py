"""Exception hierarchy. Each family carries the process exit code the CLI reports."""


class FinslerLabError(Exception):
    exit_code: int = 3


class SpecParseError(FinslerLabError):
    exit_code = 2


class MethodUnsupported(SpecParseError):
    pass


class SampleBudgetTooSmall(SpecParseError):
    pass


class NumericalError(FinslerLabError):
    exit_code = 3


class NotConverged(NumericalError):
    pass


class NonConvexDetected(NumericalError):
    pass


class SingularDual(NumericalError):
    pass


class RejectionStall(NumericalError):
    pass


class DomainError(FinslerLabError):
    exit_code = 4


class InvalidBody(DomainError):
    pass


class NotInterior(DomainError):
    pass


class DegenerateDirection(DomainError):
    pass


class NoCommonInteriorPoint(DomainError):
    pass


class DriftOutsideTarget(DomainError):
    pass


class PointOnBoundary(DomainError):
    pass


class PathExitsDomain(DomainError):
    pass


class DomainNotUnitBall(DomainError):
    pass
