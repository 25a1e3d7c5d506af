"""Exception hierarchy shared by all qtur modules."""


class QturError(ValueError):
    """Base class for every error raised by qtur."""


class NotHermitian(QturError):
    pass


class InvalidState(QturError):
    """Matrix is not a valid density matrix (trace, positivity, shape)."""


class DimensionMismatch(QturError):
    pass


class SingularState(QturError):
    """A full-rank state was required but the spectrum touches zero."""


class SingularEnvironment(SingularState):
    pass


class InvalidRank(QturError):
    pass


class NotUnitary(QturError):
    pass


class DivergentIntegral(QturError):
    pass


class ZeroVariance(QturError):
    pass


class InvalidMoments(QturError):
    pass


class DegenerateMeans(QturError):
    pass


class DegenerateDerivative(QturError):
    pass


class NonPositiveArgument(QturError):
    pass
