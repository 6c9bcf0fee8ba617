"""Exception hierarchy for qcert.

Every error raised deliberately by the package derives from
:class:`QCertError`, and from the closest builtin so that generic
``except ValueError`` handlers keep working.
"""


class QCertError(Exception):
    """Base class for all qcert errors."""


class ZeroVector(QCertError, ValueError):
    pass


class NotSymmetric(QCertError, ValueError):
    pass


class DimensionMismatch(QCertError, ValueError):
    pass


class DomainViolation(QCertError, ValueError):
    """A finite-difference stencil or sample left the domain box."""


class VanishingGradient(QCertError, ValueError):
    """The gradient (or g) is zero, within tolerance, at a point where it must not be."""


class BadIndices(QCertError, ValueError):
    pass


class DegenerateBorder(QCertError, ValueError):
    pass


class PreconditionFailed(QCertError, ValueError):
    pass


class DegenerateSlope(QCertError, ValueError):
    """|g2| is too small to integrate the level-curve ODE."""


class ParseError(QCertError, ValueError):
    def __init__(self, offset: int, message: str):
        self.offset = offset
        self.message = message
        super().__init__(f"{message} (at offset {offset})")


class DomainError(QCertError, ArithmeticError):
    """Expression evaluated outside its mathematical domain (log of 0, sqrt of -1, ...)."""


class ExpressionOverflow(QCertError, OverflowError):
    pass


class ConfigError(QCertError, ValueError):
    pass
