"""Exception types raised across the package."""


class StrataError(Exception):
    """Base class for all package errors."""


class DuplicateHyperplane(StrataError, ValueError):
    pass


class NonPositiveDimension(StrataError, ValueError):
    pass


class PointNotInClosure(StrataError, ValueError):
    pass


class StratumPieceMissing(StrataError, KeyError):
    pass


class GrowthViolation(StrataError, ValueError):
    pass


class NotOnInterface(StrataError, ValueError):
    pass


class EmptyEssentialSet(StrataError, RuntimeError):
    pass


class EmptyTangentialSet(StrataError, RuntimeError):
    pass


class ZenoCapExceeded(StrataError, RuntimeError):
    pass


class BudgetExceeded(StrataError, RuntimeError):
    pass


class OutOfRange(StrataError, ValueError):
    pass


class GridOutOfRange(OutOfRange):
    pass


class BoxTooSmall(StrataError, RuntimeError):
    """Too many semi-Lagrangian foot points left the computational box."""


class ConfigParse(StrataError, ValueError):
    pass


class HyperplaneOutsideBox(UserWarning):
    pass
