"""Exception hierarchy shared by every module."""


class RKHSError(Exception):
    """Base class for library errors."""


class DomainError(RKHSError, ValueError):
    """A point lies outside the domain of a kernel, density or map."""


class RegularityError(RKHSError):
    """A kernel lacks the smoothness an operation needs."""


class KernelMismatch(RKHSError, ValueError):
    """Two RKHS elements live in different spaces."""


class NonFinite(RKHSError, ArithmeticError):
    """An integrand returned NaN or infinity at a quadrature node."""


class NoConvergence(RKHSError):
    """Adaptive refinement exhausted its budget."""


class NegativeDiagonal(RKHSError, ValueError):
    """K(x, x) is negative beyond the PSD tolerance."""


class HypothesisNotMet(RKHSError):
    """The absolute integrability gate for a mean embedding failed."""


class SingularSystem(RKHSError, ArithmeticError):
    """The regularized Gram system could not be factorized."""


class GrammarError(RKHSError, ValueError):
    """A kernel, density, map or sequence string could not be parsed."""
