"""Exception hierarchy shared by every module of the package."""


class LegnError(Exception):
    """Base class for all errors raised by :mod:`legn`."""


# series
class NonUnitDivisor(LegnError, ZeroDivisionError):
    pass


class WeightMismatch(LegnError, ValueError):
    pass


class NotLocal(LegnError, ValueError):
    """A series substituted into another one does not vanish at the origin."""


class RootOfNonUnit(LegnError, ValueError):
    pass


class NotInvertibleOrder(LegnError, ValueError):
    pass


# branch
class BadOrder(LegnError, ValueError):
    pass


class NotPrimitive(LegnError, ValueError):
    """The exponent support has a common factor: the parametrization is not primitive."""


class TruncationTooSmall(LegnError, ValueError):
    pass


class NotEquisingular(LegnError, ValueError):
    """A perturbation would change the topological type of the curve."""


class NotSemiQuasiHomogeneous(NotEquisingular):
    pass


class TiltedTangentCone(LegnError, ValueError):
    pass


# contact
class NotInGroupJ(LegnError, ValueError):
    pass


class DegenerateJacobian(LegnError, ValueError):
    pass


class NotContact(LegnError, AssertionError):
    pass


class NotLegendrianImage(LegnError, AssertionError):
    pass


# versal / classify
class HypothesisViolated(LegnError, ValueError):
    pass


class BelowConductorRegion(LegnError, ValueError):
    pass


class BelowConductor(LegnError, ValueError):
    pass


class ReductionFailed(LegnError, RuntimeError):
    pass
