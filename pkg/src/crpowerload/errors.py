"""Exception types raised by the solver stack."""


class CrPowerLoadError(Exception):
    """Base class for all package errors."""


class DegenerateProfile(CrPowerLoadError, ValueError):
    """Sensing probabilities make a posterior denominator vanish."""


class DistanceBelowReference(CrPowerLoadError, ValueError):
    pass


class ZeroPosterior(CrPowerLoadError, ValueError):
    """beta_oo is zero, so the ACI cap is unbounded."""


class ZeroRate(CrPowerLoadError, ValueError):
    """Energy efficiency requested for an allocation with zero capacity."""


class SolverError(CrPowerLoadError, RuntimeError):
    """Numerical failure inside the KKT / Dinkelbach solver."""


class BisectionStall(SolverError):
    pass


class MaxIterations(SolverError):
    pass


class NotConverged(CrPowerLoadError, RuntimeError):
    """Reference oracle hit its iteration cap."""


class ConfigError(CrPowerLoadError, ValueError):
    pass


class ValidationFailure(CrPowerLoadError):
    """Cross-check failed; ``rows`` holds the full report, ``failures`` the failing rows."""

    def __init__(self, message, failures=(), rows=()):
        super().__init__(message)
        self.failures = list(failures)
        self.rows = list(rows)
