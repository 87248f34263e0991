class PanocError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PanocError, ValueError):
    pass


class OracleFailure(PanocError):
    """An oracle returned NaN, a non-finite prox value, or a bad shape."""


class ProxBoundViolation(PanocError, ValueError):
    """The stepsize is not below the prox-boundedness threshold of ``g``."""


class InnerBudgetExhausted(PanocError):
    """The inexact prox inner loop ran out of iterations before certifying."""


class DomainError(PanocError, ValueError):
    pass


class UnknownProblem(PanocError, KeyError):
    pass
