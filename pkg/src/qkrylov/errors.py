"""Exception and warning types shared by the solver modules."""


class QKrylovError(Exception):
    """Base class for all errors raised by qkrylov."""


class DimensionMismatch(QKrylovError, ValueError):
    pass


class ParseError(QKrylovError, ValueError):
    pass


class NonSquare(QKrylovError, ValueError):
    pass


class BadSplit(QKrylovError, ValueError):
    pass


class EmptySample(QKrylovError, ValueError):
    pass


class DegenerateBlock(QKrylovError, ValueError):
    """An eigenvector has a vanishing block, so no W^2 witness can be built."""


class ZeroRightHandSide(QKrylovError, ValueError):
    pass


class BadDimensions(QKrylovError, ValueError):
    pass


class BadLevels(QKrylovError, ValueError):
    pass


class NoStrip(QKrylovError, ValueError):
    pass


class SingularModel(QKrylovError, ArithmeticError):
    """The projected model matrix is singular; the Galerkin iterate does not exist."""

    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


class MaxIterExceeded(QKrylovError, RuntimeError):
    def __init__(self, msg, x=None, report=None):
        super().__init__(msg)
        self.x = x
        self.report = report


class ExhaustedBlock(QKrylovError):
    """A block basis already spans its whole coordinate space."""


class KrylovStop(Exception):
    """Control-flow signal: the Krylov space cannot grow any further.

    Not an error.  The state passed to the step that raised it is left
    consistent, and ``exact`` says whether the space is known to contain
    the exact solution.
    """

    exact = True


class HappyBreakdown(KrylovStop):
    pass


class GradeReached(KrylovStop):
    pass


class RankDeficientWarning(RuntimeWarning):
    pass
