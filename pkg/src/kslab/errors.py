"""Exception hierarchy shared by every kslab module."""


class KSLabError(Exception):
    """Base class for all errors raised by kslab."""


# scalars
class DivisionByZero(KSLabError, ZeroDivisionError):
    pass


class NonInvertible(KSLabError, ArithmeticError):
    pass


class RingMismatch(KSLabError, TypeError):
    pass


class NotPrime(KSLabError, ValueError):
    pass


class NoRoot(KSLabError, RuntimeError):
    pass


class ParseError(KSLabError, ValueError):
    pass


# matrices
class ShapeMismatch(KSLabError, ValueError):
    pass


class IsotropicVector(KSLabError, ValueError):
    pass


class ZeroVector(KSLabError, ValueError):
    pass


class NotABasis(KSLabError, ValueError):
    pass


class NotIdempotent(KSLabError, ValueError):
    pass


class NotInCorner(KSLabError, ValueError):
    pass


class DenominatorNotInvertible(KSLabError, ArithmeticError):
    pass


# datasets
class MissingExternalData(KSLabError, FileNotFoundError):
    pass


class DataValidationError(KSLabError, ValueError):
    pass


# partial Boolean algebras
class NotClosed(KSLabError, ValueError):
    pass


class CarrierNotClosed(KSLabError, ValueError):
    pass


# solver
class TooLarge(KSLabError, ValueError):
    pass


class DimensionCap(KSLabError, ValueError):
    pass


class CertificateError(KSLabError, ValueError):
    """An UNSAT refutation or SAT coloring failed independent replay."""


# morphisms
class NotSemisimple(KSLabError, ValueError):
    pass


class InvalidColoring(KSLabError, ValueError):
    pass


class ClosureViolation(KSLabError, ValueError):
    pass
