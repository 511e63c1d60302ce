"""Exception hierarchy."""


class TrishlabError(Exception):
    """Base class for all library errors."""


class DomainViolation(TrishlabError, ValueError):
    """A point lies outside the objective's domain."""


class NonConvergence(TrishlabError, RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class ScheduleUnderflow(TrishlabError, ValueError):
    """A schedule was queried before ``t_min`` or where it vanishes."""


class WrongScheduleKind(TrishlabError, TypeError):
    """An operation that needs a power schedule got something else."""


class BetaZero(TrishlabError, ValueError):
    """The first-order reformulation needs a strictly positive beta."""


class InfeasibleDelta(TrishlabError, ValueError):
    """delta <= 2*sqrt(1-p): the growth condition cannot hold."""


class MissingMinNormSolution(TrishlabError, ValueError):
    """The operation needs the minimum-norm minimizer of the objective."""


class InsufficientSamples(TrishlabError, ValueError):
    """Too few trajectory samples in the requested window."""


class NonPositiveQuantity(InsufficientSamples):
    """Too few strictly positive values for a log-log fit."""
